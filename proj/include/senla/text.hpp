#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "senla/common.hpp"

namespace senla {

// One activity class. Seen entries occupy the id block [0, seen_count) and
// unseen entries follow; similarity columns index the registry directly.
struct ClassEntry {
    int class_id = 0;
    std::string name;
    std::string description;
    bool seen = true;
};

class Registry {
   public:
    Registry() = default;
    explicit Registry(std::vector<ClassEntry> entries);

    const std::vector<ClassEntry>& entries() const { return entries_; }
    const ClassEntry& entry(int class_id) const;
    int total() const { return static_cast<int>(entries_.size()); }
    int seen_count() const;
    int unseen_count() const { return total() - seen_count(); }

    void validate() const;

    std::string serialize() const;
    static Registry parse(const std::string& text);
    uint64_t hash() const { return fnv1a64(serialize()); }

   private:
    std::vector<ClassEntry> entries_;
};

// Word-level vocabulary; id 0 = padding, id 1 = unknown, real tokens from 2.
class Vocabulary {
   public:
    static constexpr int kPad = 0;
    static constexpr int kUnk = 1;

    Vocabulary() = default;
    static Vocabulary from_tokens(std::vector<std::string> tokens);
    // Tokens in first-appearance order over the registry (name then
    // description, entries in id order); deterministic for a given registry.
    static Vocabulary build(const Registry& registry);

    int id(const std::string& word) const;
    const std::string& word(int id) const;
    int size() const { return static_cast<int>(tokens_.size()) + 2; }

    std::string serialize() const;  // one token per line; line i holds id i+2
    static Vocabulary parse(const std::string& text);

    bool operator==(const Vocabulary& o) const { return tokens_ == o.tokens_; }

   private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, int> index_;
};

struct TokenSequence {
    std::vector<int> ids;  // real tokens only; positions past length() are padding by convention
    int length() const { return static_cast<int>(ids.size()); }
};

// Lowercases and splits on whitespace/punctuation.
std::vector<std::string> split_words(const std::string& text);

TokenSequence tokenize(const Vocabulary& vocab, const std::string& text, int max_len);

// name (+ description unless ablated), truncated to max_len.
TokenSequence assemble_token(const Vocabulary& vocab, const ClassEntry& entry,
                             bool use_description, int max_len);

enum class LabelSpace { SeenOnly, Full };

// Token sequences for the classification label space. `zero_shot_text`
// selects between the training assembly rule ("name_desc") and the literal
// name-twice variant ("name_name").
std::vector<TokenSequence> zero_shot_tokens(const Vocabulary& vocab, const Registry& registry,
                                            LabelSpace space, bool use_description,
                                            const std::string& zero_shot_text, int max_len);

}  // namespace senla
