#include "rppg/config.hpp"

#include <fstream>
#include <stdexcept>

#include "rppg/errors.hpp"

namespace rppg {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return "";
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

bool parse_bool(const std::string& v, const std::string& key) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("config: bad boolean for " + key + ": " + v);
}

}  // namespace

RunConfig read_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path);
    RunConfig cfg;
    std::string line;
    while (std::getline(in, line)) {
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("config: malformed line: " + line);
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        try {
            if (key == "T") cfg.network.T = std::stoll(value);
            else if (key == "H") cfg.network.H = std::stoll(value);
            else if (key == "W") cfg.network.W = std::stoll(value);
            else if (key == "use_cfeature") cfg.network.use_cfeature = parse_bool(value, key);
            else if (key == "use_skinmap") cfg.network.use_skinmap = parse_bool(value, key);
            else if (key == "rescale_mask") cfg.network.rescale_mask = parse_bool(value, key);
            else if (key == "stsc_avg_pool") cfg.network.stsc_avg_pool = parse_bool(value, key);
            else if (key == "alpha") cfg.weights.alpha = std::stod(value);
            else if (key == "beta") cfg.weights.beta = std::stod(value);
            else if (key == "lr") cfg.lr = std::stod(value);
            else if (key == "epochs") cfg.epochs = std::stoll(value);
            else if (key == "batch_size") cfg.batch_size = std::stoll(value);
            else if (key == "seed") cfg.seed = std::stoull(value);
            else if (key == "freq_loss") cfg.use_frequency_loss = parse_bool(value, key);
            else if (key == "skin_loss") cfg.use_skin_loss = parse_bool(value, key);
            else if (key == "freq_logits") {
                if (value == "raw") cfg.freq_logits = FreqLogits::RawPsd;
                else if (value == "log") cfg.freq_logits = FreqLogits::LogPsd;
                else throw ConfigError("config: freq_logits must be raw or log");
            } else {
                throw ConfigError("config: unknown key: " + key);
            }
        } catch (const std::invalid_argument&) {
            throw ConfigError("config: bad value for " + key + ": " + value);
        }
    }
    if (cfg.lr <= 0.0) throw ConfigError("config: lr must be > 0");
    if (cfg.epochs < 0) throw ConfigError("config: epochs must be >= 0");
    if (cfg.batch_size < 1) throw ConfigError("config: batch_size must be >= 1");
    cfg.network.validate();
    return cfg;
}

void write_run_config(const std::string& path, const RunConfig& cfg) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out.precision(17);
    out << "T = " << cfg.network.T << "\n";
    out << "H = " << cfg.network.H << "\n";
    out << "W = " << cfg.network.W << "\n";
    out << "use_cfeature = " << (cfg.network.use_cfeature ? "true" : "false") << "\n";
    out << "use_skinmap = " << (cfg.network.use_skinmap ? "true" : "false") << "\n";
    out << "rescale_mask = " << (cfg.network.rescale_mask ? "true" : "false") << "\n";
    out << "stsc_avg_pool = " << (cfg.network.stsc_avg_pool ? "true" : "false") << "\n";
    out << "alpha = " << cfg.weights.alpha << "\n";
    out << "beta = " << cfg.weights.beta << "\n";
    out << "lr = " << cfg.lr << "\n";
    out << "epochs = " << cfg.epochs << "\n";
    out << "batch_size = " << cfg.batch_size << "\n";
    out << "seed = " << cfg.seed << "\n";
    out << "freq_loss = " << (cfg.use_frequency_loss ? "true" : "false") << "\n";
    out << "skin_loss = " << (cfg.use_skin_loss ? "true" : "false") << "\n";
    out << "freq_logits = " << (cfg.freq_logits == FreqLogits::RawPsd ? "raw" : "log") << "\n";
}

}  // namespace rppg
