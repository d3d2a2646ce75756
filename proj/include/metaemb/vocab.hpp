// Dense 0-based token <-> id mapping. Tokens are compared byte-exactly.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "metaemb/error.hpp"

namespace metaemb {

class Vocabulary {
public:
    Vocabulary() = default;

    // Returns the id of `token`, inserting it if new. Keeps first-appearance order.
    std::uint32_t add(const std::string& token) {
        auto it = index_.find(token);
        if (it != index_.end()) return it->second;
        auto id = static_cast<std::uint32_t>(words_.size());
        words_.push_back(token);
        index_.emplace(words_.back(), id);
        return id;
    }

    std::optional<std::uint32_t> lookup(const std::string& token) const {
        auto it = index_.find(token);
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }

    bool contains(const std::string& token) const {
        return index_.find(token) != index_.end();
    }

    const std::string& word(std::uint32_t id) const {
        if (id >= words_.size()) throw Error("vocabulary id out of range");
        return words_[id];
    }

    std::size_t size() const { return words_.size(); }
    const std::vector<std::string>& words() const { return words_; }

    bool operator==(const Vocabulary& other) const { return words_ == other.words_; }

private:
    std::vector<std::string> words_;
    std::unordered_map<std::string, std::uint32_t> index_;
};

}  // namespace metaemb
