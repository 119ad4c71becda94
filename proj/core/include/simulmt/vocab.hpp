#pragma once

#include <string>
#include <unordered_map>
#include <vector>

namespace simulmt {

inline constexpr int kBos = 0;  // <s>
inline constexpr int kEos = 1;  // </s>
inline constexpr int kUnk = 2;  // <unk>

/// token <-> id bijection with fixed reserved ids 0..2.
class Vocabulary {
public:
    Vocabulary();

    /// Returns the id, adding the token if new. Reserved surfaces map to
    /// their reserved ids.
    int add(const std::string& token);
    /// Lookup; unknown tokens map to kUnk.
    int id(const std::string& token) const;
    const std::string& token(int id) const;
    int size() const { return static_cast<int>(id_to_token_.size()); }

    /// One content token per line; line number = id - 3.
    void save(const std::string& path) const;
    static Vocabulary load(const std::string& path);

    /// Deterministic build: tokens sorted by (frequency desc, surface asc),
    /// keeping every token seen at least `min_freq` times.
    static Vocabulary build(const std::vector<std::vector<std::string>>& sentences, int min_freq = 1);

private:
    std::vector<std::string> id_to_token_;
    std::unordered_map<std::string, int> token_to_id_;
};

}  // namespace simulmt
