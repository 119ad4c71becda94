#include "simulmt/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace simulmt {

SyntheticTask parse_task(const std::string& name) {
    if (name == "copy") return SyntheticTask::kCopy;
    if (name == "window_swap") return SyntheticTask::kWindowSwap;
    if (name == "vocab_shift") return SyntheticTask::kVocabShift;
    throw std::invalid_argument("unknown synthetic task: " + name);
}

std::string task_name(SyntheticTask task) {
    switch (task) {
        case SyntheticTask::kCopy: return "copy";
        case SyntheticTask::kWindowSwap: return "window_swap";
        case SyntheticTask::kVocabShift: return "vocab_shift";
    }
    return "?";
}

namespace {

void validate(const SyntheticSpec& spec) {
    if (spec.n_pairs <= 0) throw std::invalid_argument("synthetic: n_pairs must be positive");
    if (spec.vocab_size <= 0) throw std::invalid_argument("synthetic: vocab_size must be positive");
    if (spec.len_min < 1 || spec.len_max < spec.len_min) throw std::invalid_argument("synthetic: bad length range");
    if (spec.task == SyntheticTask::kWindowSwap && spec.window > spec.len_min)
        throw std::invalid_argument("synthetic: window " + std::to_string(spec.window) +
                                    " larger than minimum length " + std::to_string(spec.len_min));
    if (spec.task == SyntheticTask::kWindowSwap && spec.window < 1)
        throw std::invalid_argument("synthetic: window must be >= 1");
}

std::vector<int> transform(const SyntheticSpec& spec, const std::vector<int>& src) {
    std::vector<int> tgt = src;
    switch (spec.task) {
        case SyntheticTask::kCopy:
            break;
        case SyntheticTask::kWindowSwap:
            for (std::size_t i = 0; i < tgt.size(); i += static_cast<std::size_t>(spec.window)) {
                const auto end = std::min(i + static_cast<std::size_t>(spec.window), tgt.size());
                std::reverse(tgt.begin() + static_cast<long>(i), tgt.begin() + static_cast<long>(end));
            }
            break;
        case SyntheticTask::kVocabShift:
            for (int& t : tgt) t = (t + spec.shift) % spec.vocab_size;
            break;
    }
    return tgt;
}

}  // namespace

std::vector<std::pair<std::vector<std::string>, std::vector<std::string>>> generate_synthetic_text(
    const SyntheticSpec& spec, Rng& rng) {
    validate(spec);
    std::vector<std::pair<std::vector<std::string>, std::vector<std::string>>> out;
    out.reserve(static_cast<std::size_t>(spec.n_pairs));
    for (int p = 0; p < spec.n_pairs; ++p) {
        const int len = spec.len_min + rng.uniform_int(spec.len_max - spec.len_min + 1);
        std::vector<int> src(static_cast<std::size_t>(len));
        for (int& t : src) t = rng.uniform_int(spec.vocab_size);
        const std::vector<int> tgt = transform(spec, src);
        auto surface = [](const std::vector<int>& ids) {
            std::vector<std::string> toks;
            toks.reserve(ids.size());
            for (int t : ids) toks.push_back("w" + std::to_string(t));
            return toks;
        };
        out.emplace_back(surface(src), surface(tgt));
    }
    return out;
}

Corpus generate_synthetic(const SyntheticSpec& spec, Rng& rng, const std::string& split) {
    auto text = generate_synthetic_text(spec, rng);
    Corpus corpus;
    corpus.split = split;
    for (int t = 0; t < spec.vocab_size; ++t) {
        corpus.vocab_src.add("w" + std::to_string(t));
        corpus.vocab_tgt.add("w" + std::to_string(t));
    }
    for (const auto& [src, tgt] : text) {
        SentencePair pair;
        for (const auto& tok : src) pair.source.push_back(corpus.vocab_src.id(tok));
        pair.source.push_back(kEos);
        for (const auto& tok : tgt) pair.target.push_back(corpus.vocab_tgt.id(tok));
        pair.target.push_back(kEos);
        corpus.pairs.push_back(std::move(pair));
    }
    return corpus;
}

namespace {

std::vector<std::vector<std::string>> read_tokenized(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read file " + path);
    std::vector<std::vector<std::string>> lines;
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream ss(line);
        std::vector<std::string> toks;
        std::string tok;
        while (ss >> tok) toks.push_back(tok);
        lines.push_back(std::move(toks));
    }
    return lines;
}

std::vector<int> to_ids(const std::vector<std::string>& toks, const Vocabulary& vocab) {
    std::vector<int> ids;
    ids.reserve(toks.size() + 1);
    for (const auto& t : toks) ids.push_back(vocab.id(t));
    ids.push_back(kEos);
    return ids;
}

}  // namespace

LoadReport load_parallel(const std::string& src_path, const std::string& tgt_path, const Vocabulary& vocab_src,
                         const Vocabulary& vocab_tgt, int len_cap, const std::string& split) {
    auto src_lines = read_tokenized(src_path);
    auto tgt_lines = read_tokenized(tgt_path);
    if (src_lines.size() != tgt_lines.size())
        throw std::runtime_error("line-count mismatch: " + src_path + " has " + std::to_string(src_lines.size()) +
                                 " lines, " + tgt_path + " has " + std::to_string(tgt_lines.size()));
    LoadReport report;
    report.corpus.split = split;
    report.corpus.vocab_src = vocab_src;
    report.corpus.vocab_tgt = vocab_tgt;
    for (std::size_t i = 0; i < src_lines.size(); ++i) {
        SentencePair pair{to_ids(src_lines[i], vocab_src), to_ids(tgt_lines[i], vocab_tgt)};
        if (static_cast<int>(pair.source.size()) > len_cap || static_cast<int>(pair.target.size()) > len_cap) {
            ++report.dropped_over_cap;
            continue;
        }
        report.corpus.pairs.push_back(std::move(pair));
    }
    return report;
}

LoadReport load_parallel_build_vocab(const std::string& src_path, const std::string& tgt_path, int len_cap,
                                     const std::string& split) {
    const Vocabulary vs = Vocabulary::build(read_tokenized(src_path));
    const Vocabulary vt = Vocabulary::build(read_tokenized(tgt_path));
    return load_parallel(src_path, tgt_path, vs, vt, len_cap, split);
}

void write_text_file(const std::string& path, const std::vector<std::vector<std::string>>& lines) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write file " + path);
    for (const auto& toks : lines) {
        for (std::size_t i = 0; i < toks.size(); ++i) out << (i ? " " : "") << toks[i];
        out << "\n";
    }
}

}  // namespace simulmt
