#include "simulmt/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace simulmt {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

}  // namespace

std::map<std::string, std::map<std::string, std::string>> parse_ini(const std::string& text) {
    std::map<std::string, std::map<std::string, std::string>> out;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::size_t comment = line.find_first_of("#;");
        if (comment != std::string::npos) line = line.substr(0, comment);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw std::runtime_error("config line " + std::to_string(lineno) + ": bad section header");
            section = trim(line.substr(1, line.size() - 2));
            out[section];
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("config line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw std::runtime_error("config line " + std::to_string(lineno) + ": empty key");
        out[section][key] = value;
    }
    return out;
}

namespace {

class Schema {
public:
    Schema(std::map<std::string, std::map<std::string, std::string>> raw) : raw_(std::move(raw)) {}

    std::string str(const std::string& sec, const std::string& key, const std::string& fallback) {
        mark(sec, key);
        auto v = find(sec, key);
        return v ? *v : fallback;
    }

    long integer(const std::string& sec, const std::string& key, long fallback) {
        mark(sec, key);
        auto v = find(sec, key);
        if (!v) return fallback;
        try {
            std::size_t used = 0;
            const long parsed = std::stol(*v, &used);
            if (used != v->size()) throw std::invalid_argument("");
            return parsed;
        } catch (const std::exception&) {
            throw std::runtime_error("config " + sec + "." + key + ": expected an integer, got '" + *v + "'");
        }
    }

    double real(const std::string& sec, const std::string& key, double fallback) {
        mark(sec, key);
        auto v = find(sec, key);
        if (!v) return fallback;
        try {
            std::size_t used = 0;
            const double parsed = std::stod(*v, &used);
            if (used != v->size()) throw std::invalid_argument("");
            return parsed;
        } catch (const std::exception&) {
            throw std::runtime_error("config " + sec + "." + key + ": expected a number, got '" + *v + "'");
        }
    }

    bool boolean(const std::string& sec, const std::string& key, bool fallback) {
        mark(sec, key);
        auto v = find(sec, key);
        if (!v) return fallback;
        if (*v == "true" || *v == "1") return true;
        if (*v == "false" || *v == "0") return false;
        throw std::runtime_error("config " + sec + "." + key + ": expected true/false, got '" + *v + "'");
    }

    std::vector<double> real_list(const std::string& sec, const std::string& key, std::vector<double> fallback) {
        mark(sec, key);
        auto v = find(sec, key);
        if (!v) return fallback;
        std::vector<double> out;
        std::istringstream ss(*v);
        std::string item;
        while (std::getline(ss, item, ',')) {
            item = trim(item);
            if (item.empty()) continue;
            out.push_back(std::stod(item));
        }
        if (out.empty()) throw std::runtime_error("config " + sec + "." + key + ": empty list");
        return out;
    }

    /// Any key present in the raw data but never consumed is unknown.
    void reject_unknown() const {
        for (const auto& [sec, keys] : raw_)
            for (const auto& [key, _] : keys)
                if (!consumed_.count(sec + "." + key))
                    throw std::runtime_error("unknown config key " + (sec.empty() ? key : sec + "." + key));
    }

private:
    const std::string* find(const std::string& sec, const std::string& key) const {
        auto s = raw_.find(sec);
        if (s == raw_.end()) return nullptr;
        auto k = s->second.find(key);
        return k == s->second.end() ? nullptr : &k->second;
    }
    void mark(const std::string& sec, const std::string& key) { consumed_.insert(sec + "." + key); }

    std::map<std::string, std::map<std::string, std::string>> raw_;
    std::set<std::string> consumed_;
};

}  // namespace

ExperimentConfig ExperimentConfig::from_string(const std::string& text, const std::vector<std::string>& overrides) {
    auto raw = parse_ini(text);
    for (const std::string& ov : overrides) {
        const std::size_t eq = ov.find('=');
        if (eq == std::string::npos) throw std::runtime_error("override '" + ov + "' is not section.key=value");
        const std::string target = trim(ov.substr(0, eq));
        const std::string value = trim(ov.substr(eq + 1));
        const std::size_t dot = target.find('.');
        if (dot == std::string::npos) throw std::runtime_error("override '" + ov + "' is not section.key=value");
        raw[target.substr(0, dot)][target.substr(dot + 1)] = value;
    }

    Schema s(std::move(raw));
    ExperimentConfig cfg;
    cfg.seed = static_cast<std::uint64_t>(s.integer("run", "seed", 1));

    cfg.data.dir = s.str("data", "dir", cfg.data.dir);
    cfg.data.task = s.str("data", "task", cfg.data.task);
    parse_task(cfg.data.task);  // validates the name
    cfg.data.n_train = static_cast<int>(s.integer("data", "n_train", cfg.data.n_train));
    cfg.data.n_valid = static_cast<int>(s.integer("data", "n_valid", cfg.data.n_valid));
    cfg.data.n_test = static_cast<int>(s.integer("data", "n_test", cfg.data.n_test));
    cfg.data.len_min = static_cast<int>(s.integer("data", "len_min", cfg.data.len_min));
    cfg.data.len_max = static_cast<int>(s.integer("data", "len_max", cfg.data.len_max));
    cfg.data.vocab_size = static_cast<int>(s.integer("data", "vocab_size", cfg.data.vocab_size));
    cfg.data.window = static_cast<int>(s.integer("data", "window", cfg.data.window));
    cfg.data.shift = static_cast<int>(s.integer("data", "shift", cfg.data.shift));
    cfg.data.len_cap = static_cast<int>(s.integer("data", "len_cap", cfg.data.len_cap));
    cfg.data.train_src = s.str("data", "train_src", "");
    cfg.data.train_tgt = s.str("data", "train_tgt", "");
    cfg.data.valid_src = s.str("data", "valid_src", "");
    cfg.data.valid_tgt = s.str("data", "valid_tgt", "");
    cfg.data.test_src = s.str("data", "test_src", "");
    cfg.data.test_tgt = s.str("data", "test_tgt", "");
    cfg.data.vocab_src = s.str("data", "vocab_src", "");
    cfg.data.vocab_tgt = s.str("data", "vocab_tgt", "");

    cfg.env.emb_dim = static_cast<int>(s.integer("env", "emb_dim", cfg.env.emb_dim));
    cfg.env.hidden_dim = static_cast<int>(s.integer("env", "hidden_dim", cfg.env.hidden_dim));
    cfg.env.attn_dim = static_cast<int>(s.integer("env", "attn_dim", cfg.env.attn_dim));

    cfg.agent.hidden_dim = static_cast<int>(s.integer("agent", "hidden_dim", cfg.agent.hidden_dim));
    cfg.agent.baseline_hidden = static_cast<int>(s.integer("agent", "baseline_hidden", cfg.agent.baseline_hidden));

    cfg.reward.alpha = s.real("reward", "alpha", cfg.reward.alpha);
    cfg.reward.beta = s.real("reward", "beta", cfg.reward.beta);
    cfg.reward.d_star = s.real("reward", "d_star", cfg.reward.d_star);
    cfg.reward.c_star = s.real("reward", "c_star", cfg.reward.c_star);
    cfg.reward.max_ngram = static_cast<int>(s.integer("reward", "max_ngram", cfg.reward.max_ngram));
    cfg.reward.validate();

    cfg.train.lr_agent = s.real("train", "lr_agent", cfg.train.lr_agent);
    cfg.train.lr_baseline = s.real("train", "lr_baseline", cfg.train.lr_baseline);
    cfg.train.entropy_coef = s.real("train", "entropy_coef", cfg.train.entropy_coef);
    cfg.train.entropy_literal_sign = s.boolean("train", "entropy_literal_sign", cfg.train.entropy_literal_sign);
    cfg.train.batch_sentences = static_cast<int>(s.integer("train", "batch_sentences", cfg.train.batch_sentences));
    cfg.train.samples_per_sentence =
        static_cast<int>(s.integer("train", "samples_per_sentence", cfg.train.samples_per_sentence));
    cfg.train.max_updates = static_cast<int>(s.integer("train", "max_updates", cfg.train.max_updates));
    cfg.train.eval_every = static_cast<int>(s.integer("train", "eval_every", cfg.train.eval_every));
    cfg.train.n_workers = static_cast<int>(s.integer("train", "n_workers", cfg.train.n_workers));
    cfg.train.mle_lr = s.real("train", "mle_lr", cfg.train.mle_lr);
    cfg.train.mle_epochs = static_cast<int>(s.integer("train", "mle_epochs", cfg.train.mle_epochs));
    cfg.train.mle_batch = static_cast<int>(s.integer("train", "mle_batch", cfg.train.mle_batch));
    cfg.train.seed = cfg.seed;

    cfg.sweep.target = s.str("sweep", "target", cfg.sweep.target);
    if (cfg.sweep.target != "ap" && cfg.sweep.target != "cw")
        throw std::runtime_error("config sweep.target must be 'ap' or 'cw'");
    cfg.sweep.grid = s.real_list("sweep", "grid", cfg.sweep.grid);
    cfg.sweep.beam_k = static_cast<int>(s.integer("sweep", "beam_k", cfg.sweep.beam_k));

    auto require_min = [](long value, long lo, const char* what) {
        if (value < lo) throw std::runtime_error(std::string("config ") + what + " must be >= " + std::to_string(lo));
    };
    require_min(cfg.train.batch_sentences, 1, "train.batch_sentences");
    require_min(cfg.train.samples_per_sentence, 1, "train.samples_per_sentence");
    require_min(cfg.train.max_updates, 1, "train.max_updates");
    require_min(cfg.train.eval_every, 1, "train.eval_every");
    require_min(cfg.train.n_workers, 1, "train.n_workers");
    require_min(cfg.train.mle_epochs, 0, "train.mle_epochs");
    require_min(cfg.data.len_cap, 2, "data.len_cap");
    require_min(cfg.sweep.beam_k, 1, "sweep.beam_k");

    s.reject_unknown();
    return cfg;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path, const std::vector<std::string>& overrides) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read config file " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return from_string(buf.str(), overrides);
}

namespace {
std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}
}  // namespace

std::string ExperimentConfig::echo() const {
    std::ostringstream out;
    out << "[run]\nseed = " << seed << "\n";
    out << "[data]\n";
    out << "dir = " << data.dir << "\n";
    out << "task = " << data.task << "\n";
    out << "n_train = " << data.n_train << "\nn_valid = " << data.n_valid << "\nn_test = " << data.n_test << "\n";
    out << "len_min = " << data.len_min << "\nlen_max = " << data.len_max << "\n";
    out << "vocab_size = " << data.vocab_size << "\nwindow = " << data.window << "\nshift = " << data.shift << "\n";
    out << "len_cap = " << data.len_cap << "\n";
    auto path_line = [&](const char* key, const std::string& v) {
        if (!v.empty()) out << key << " = " << v << "\n";
    };
    path_line("train_src", data.train_src);
    path_line("train_tgt", data.train_tgt);
    path_line("valid_src", data.valid_src);
    path_line("valid_tgt", data.valid_tgt);
    path_line("test_src", data.test_src);
    path_line("test_tgt", data.test_tgt);
    path_line("vocab_src", data.vocab_src);
    path_line("vocab_tgt", data.vocab_tgt);
    out << "[env]\n";
    out << "emb_dim = " << env.emb_dim << "\nhidden_dim = " << env.hidden_dim << "\nattn_dim = " << env.attn_dim
        << "\n";
    out << "[agent]\n";
    out << "hidden_dim = " << agent.hidden_dim << "\nbaseline_hidden = " << agent.baseline_hidden << "\n";
    out << "[reward]\n";
    out << "alpha = " << fmt_double(reward.alpha) << "\nbeta = " << fmt_double(reward.beta) << "\n";
    out << "d_star = " << fmt_double(reward.d_star) << "\nc_star = " << fmt_double(reward.c_star) << "\n";
    out << "max_ngram = " << reward.max_ngram << "\n";
    out << "[train]\n";
    out << "lr_agent = " << fmt_double(train.lr_agent) << "\nlr_baseline = " << fmt_double(train.lr_baseline) << "\n";
    out << "entropy_coef = " << fmt_double(train.entropy_coef) << "\n";
    out << "entropy_literal_sign = " << (train.entropy_literal_sign ? "true" : "false") << "\n";
    out << "batch_sentences = " << train.batch_sentences << "\n";
    out << "samples_per_sentence = " << train.samples_per_sentence << "\n";
    out << "max_updates = " << train.max_updates << "\neval_every = " << train.eval_every << "\n";
    out << "n_workers = " << train.n_workers << "\n";
    out << "mle_lr = " << fmt_double(train.mle_lr) << "\nmle_epochs = " << train.mle_epochs << "\nmle_batch = "
        << train.mle_batch << "\n";
    out << "[sweep]\n";
    out << "target = " << sweep.target << "\n";
    out << "grid = ";
    for (std::size_t i = 0; i < sweep.grid.size(); ++i) out << (i ? "," : "") << fmt_double(sweep.grid[i]);
    out << "\nbeam_k = " << sweep.beam_k << "\n";
    return out.str();
}

SyntheticSpec ExperimentConfig::synthetic_spec() const {
    SyntheticSpec spec;
    spec.task = parse_task(data.task);
    spec.len_min = data.len_min;
    spec.len_max = data.len_max;
    spec.vocab_size = data.vocab_size;
    spec.window = data.window;
    spec.shift = data.shift;
    return spec;
}

std::string ExperimentConfig::path(const std::string& split, const std::string& side) const {
    const std::string* explicit_path = nullptr;
    if (split == "train") explicit_path = side == "src" ? &data.train_src : &data.train_tgt;
    if (split == "valid") explicit_path = side == "src" ? &data.valid_src : &data.valid_tgt;
    if (split == "test") explicit_path = side == "src" ? &data.test_src : &data.test_tgt;
    if (split == "vocab") explicit_path = side == "src" ? &data.vocab_src : &data.vocab_tgt;
    if (explicit_path && !explicit_path->empty()) return *explicit_path;
    if (split == "vocab") return data.dir + "/vocab." + side;
    return data.dir + "/" + split + "." + side;
}

SweepConfig ExperimentConfig::sweep_config() const {
    SweepConfig out;
    out.target = sweep.target == "ap" ? DelayTargetKind::kAverageProportion : DelayTargetKind::kConsecutiveWait;
    out.grid = sweep.grid;
    out.beam_width = sweep.beam_k;
    out.agent_hidden = agent.hidden_dim;
    out.baseline_hidden = agent.baseline_hidden;
    out.reward = reward;
    out.train = train;
    return out;
}

}  // namespace simulmt
