#include "simulmt/vocab.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <stdexcept>

namespace simulmt {

Vocabulary::Vocabulary() {
    id_to_token_ = {"<s>", "</s>", "<unk>"};
    for (int i = 0; i < 3; ++i) token_to_id_[id_to_token_[static_cast<std::size_t>(i)]] = i;
}

int Vocabulary::add(const std::string& token) {
    auto it = token_to_id_.find(token);
    if (it != token_to_id_.end()) return it->second;
    const int new_id = size();
    id_to_token_.push_back(token);
    token_to_id_[token] = new_id;
    return new_id;
}

int Vocabulary::id(const std::string& token) const {
    auto it = token_to_id_.find(token);
    return it == token_to_id_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token(int id) const {
    if (id < 0 || id >= size()) throw std::out_of_range("token id " + std::to_string(id) + " out of range");
    return id_to_token_[static_cast<std::size_t>(id)];
}

void Vocabulary::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write vocab file " + path);
    for (int i = 3; i < size(); ++i) out << id_to_token_[static_cast<std::size_t>(i)] << "\n";
}

Vocabulary Vocabulary::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read vocab file " + path);
    Vocabulary v;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (v.token_to_id_.count(line)) throw std::runtime_error("duplicate token in vocab file: " + line);
        v.add(line);
    }
    return v;
}

Vocabulary Vocabulary::build(const std::vector<std::vector<std::string>>& sentences, int min_freq) {
    std::map<std::string, long> freq;
    for (const auto& sent : sentences)
        for (const auto& tok : sent) ++freq[tok];
    std::vector<std::pair<std::string, long>> items(freq.begin(), freq.end());
    std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    Vocabulary v;
    for (const auto& [tok, n] : items)
        if (n >= min_freq) v.add(tok);
    return v;
}

}  // namespace simulmt
