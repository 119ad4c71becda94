#pragma once

#include <string>
#include <utility>
#include <vector>

#include "simulmt/rng.hpp"
#include "simulmt/vocab.hpp"

namespace simulmt {

struct SentencePair {
    std::vector<int> source;  // ends with kEos
    std::vector<int> target;  // ends with kEos
};

struct Corpus {
    std::vector<SentencePair> pairs;
    Vocabulary vocab_src;
    Vocabulary vocab_tgt;
    std::string split;  // train / valid / test
};

enum class SyntheticTask { kCopy, kWindowSwap, kVocabShift };

SyntheticTask parse_task(const std::string& name);
std::string task_name(SyntheticTask task);

struct SyntheticSpec {
    SyntheticTask task = SyntheticTask::kCopy;
    int n_pairs = 0;
    int len_min = 1;
    int len_max = 1;
    int vocab_size = 0;  // content tokens, surfaces w0..w{n-1}
    int window = 2;      // window_swap only
    int shift = 1;       // vocab_shift only
};

/// Token-surface pairs for the requested task; deterministic under the rng seed.
std::vector<std::pair<std::vector<std::string>, std::vector<std::string>>> generate_synthetic_text(
    const SyntheticSpec& spec, Rng& rng);

/// Full corpus with the task's canonical vocabulary (w0..w{n-1} in order).
Corpus generate_synthetic(const SyntheticSpec& spec, Rng& rng, const std::string& split);

struct LoadReport {
    Corpus corpus;
    int dropped_over_cap = 0;
};

/// Line-aligned parallel text; whitespace tokenization, OOV -> <unk>,
/// pairs longer than `len_cap` tokens per side (incl. </s>) dropped.
LoadReport load_parallel(const std::string& src_path, const std::string& tgt_path, const Vocabulary& vocab_src,
                         const Vocabulary& vocab_tgt, int len_cap, const std::string& split);

/// As above but building both vocabularies from the data first (min freq 1).
LoadReport load_parallel_build_vocab(const std::string& src_path, const std::string& tgt_path, int len_cap,
                                     const std::string& split);

void write_text_file(const std::string& path, const std::vector<std::vector<std::string>>& lines);

}  // namespace simulmt
