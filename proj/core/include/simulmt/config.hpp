#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "simulmt/corpus.hpp"
#include "simulmt/evaluate.hpp"
#include "simulmt/rewards.hpp"
#include "simulmt/training.hpp"

namespace simulmt {

/// INI-style text: [section] headers, key = value lines, '#'/';' comments.
std::map<std::string, std::map<std::string, std::string>> parse_ini(const std::string& text);

/// Typed, schema-validated experiment configuration. Unknown sections or
/// keys are rejected; `echo()` renders the full canonical key set (the
/// header embedded into every output artifact).
struct ExperimentConfig {
    std::uint64_t seed = 1;

    struct Data {
        std::string dir = "data";
        std::string task = "copy";
        int n_train = 2000;
        int n_valid = 200;
        int n_test = 200;
        int len_min = 5;
        int len_max = 12;
        int vocab_size = 20;
        int window = 2;
        int shift = 1;
        int len_cap = 50;
        // explicit file overrides; empty means <dir>/<split>.<side>
        std::string train_src, train_tgt, valid_src, valid_tgt, test_src, test_tgt, vocab_src, vocab_tgt;
    } data;

    struct Env {
        int emb_dim = 32;
        int hidden_dim = 64;
        int attn_dim = 64;
    } env;

    struct Agent {
        int hidden_dim = 64;
        int baseline_hidden = 64;
    } agent;

    RewardConfig reward;
    TrainConfig train;

    struct Sweep {
        std::string target = "ap";
        std::vector<double> grid = {0.3, 0.5, 0.7};
        int beam_k = 5;
    } sweep;

    static ExperimentConfig from_string(const std::string& text,
                                        const std::vector<std::string>& overrides = {});
    static ExperimentConfig from_file(const std::string& path, const std::vector<std::string>& overrides = {});

    std::string echo() const;

    SyntheticSpec synthetic_spec() const;
    std::string path(const std::string& split, const std::string& side) const;  // resolved data file
    SweepConfig sweep_config() const;
};

}  // namespace simulmt
