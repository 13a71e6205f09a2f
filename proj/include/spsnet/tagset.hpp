#pragma once

#include <bit>
#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

namespace spsnet {

/// Fixed-width bit vector identifying the nodes that contribute to a payload.
class TagSet {
public:
    TagSet() = default;
    explicit TagSet(int n) : n_(n), words_(static_cast<std::size_t>((n + 63) / 64), 0) {}
    TagSet(int n, std::initializer_list<int> bits) : TagSet(n) {
        for (int b : bits) set(b);
    }

    static TagSet one_hot(int n, int i) {
        TagSet t(n);
        t.set(i);
        return t;
    }
    static TagSet full(int n) {
        TagSet t(n);
        for (int i = 0; i < n; ++i) t.set(i);
        return t;
    }

    int size() const { return n_; }
    void set(int i) { words_[static_cast<std::size_t>(i) >> 6] |= (1ULL << (i & 63)); }
    void reset(int i) { words_[static_cast<std::size_t>(i) >> 6] &= ~(1ULL << (i & 63)); }
    bool test(int i) const { return (words_[static_cast<std::size_t>(i) >> 6] >> (i & 63)) & 1ULL; }

    int count() const {
        int c = 0;
        for (auto w : words_) c += std::popcount(w);
        return c;
    }
    bool any() const {
        for (auto w : words_)
            if (w) return true;
        return false;
    }
    bool none() const { return !any(); }
    bool all() const { return count() == n_; }

    bool is_subset_of(const TagSet& other) const {
        for (std::size_t k = 0; k < words_.size(); ++k)
            if (words_[k] & ~other.words_[k]) return false;
        return true;
    }
    bool disjoint(const TagSet& other) const {
        for (std::size_t k = 0; k < words_.size(); ++k)
            if (words_[k] & other.words_[k]) return false;
        return true;
    }

    TagSet& operator|=(const TagSet& o) {
        for (std::size_t k = 0; k < words_.size(); ++k) words_[k] |= o.words_[k];
        return *this;
    }
    TagSet& operator&=(const TagSet& o) {
        for (std::size_t k = 0; k < words_.size(); ++k) words_[k] &= o.words_[k];
        return *this;
    }
    /// Set difference.
    TagSet& operator-=(const TagSet& o) {
        for (std::size_t k = 0; k < words_.size(); ++k) words_[k] &= ~o.words_[k];
        return *this;
    }
    friend TagSet operator|(TagSet a, const TagSet& b) { return a |= b; }
    friend TagSet operator-(TagSet a, const TagSet& b) { return a -= b; }
    friend bool operator==(const TagSet& a, const TagSet& b) { return a.n_ == b.n_ && a.words_ == b.words_; }

    std::vector<int> indices() const {
        std::vector<int> out;
        for (int i = 0; i < n_; ++i)
            if (test(i)) out.push_back(i);
        return out;
    }

    std::string to_string() const {
        std::string s(static_cast<std::size_t>(n_), '0');
        for (int i = 0; i < n_; ++i)
            if (test(i)) s[static_cast<std::size_t>(i)] = '1';
        return s;
    }

private:
    int n_ = 0;
    std::vector<std::uint64_t> words_;
};

}  // namespace spsnet
