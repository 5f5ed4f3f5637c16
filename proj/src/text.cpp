#include "senla/text.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace senla {

Registry::Registry(std::vector<ClassEntry> entries) : entries_(std::move(entries)) { validate(); }

const ClassEntry& Registry::entry(int class_id) const {
    if (class_id < 0 || class_id >= total())
        throw IndexError("registry: class id " + std::to_string(class_id) + " out of range");
    return entries_[static_cast<size_t>(class_id)];
}

int Registry::seen_count() const {
    int n = 0;
    for (const auto& e : entries_) n += e.seen ? 1 : 0;
    return n;
}

void Registry::validate() const {
    if (entries_.empty()) throw ConfigError("registry: no classes");
    for (int i = 0; i < total(); ++i) {
        const auto& e = entries_[static_cast<size_t>(i)];
        if (e.class_id != i)
            throw ConfigError("registry: ids must be dense, entry " + std::to_string(i) +
                              " has id " + std::to_string(e.class_id));
        if (e.name.empty()) throw ConfigError("registry: class " + std::to_string(i) + " has empty name");
        if (e.description.empty())
            throw ConfigError("registry: class " + std::to_string(i) + " has empty description");
    }
    // Seen block must precede the unseen block so similarity columns can
    // index classes directly in both label spaces.
    const int ks = seen_count();
    for (int i = 0; i < total(); ++i)
        if (entries_[static_cast<size_t>(i)].seen != (i < ks))
            throw ConfigError("registry: seen classes must occupy ids [0, " + std::to_string(ks) + ")");
}

std::string Registry::serialize() const {
    std::ostringstream os;
    os << "class_id\tseen\tname\tdescription\n";
    for (const auto& e : entries_)
        os << e.class_id << "\t" << (e.seen ? 1 : 0) << "\t" << e.name << "\t" << e.description << "\n";
    return os.str();
}

Registry Registry::parse(const std::string& text) {
    std::istringstream is(text);
    std::string line;
    if (!std::getline(is, line) || line != "class_id\tseen\tname\tdescription")
        throw FileError("registry: missing or unexpected header line");
    std::vector<ClassEntry> entries;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::vector<std::string> fields;
        size_t start = 0;
        for (int i = 0; i < 3; ++i) {
            size_t tab = line.find('\t', start);
            if (tab == std::string::npos) throw FileError("registry: malformed line: " + line);
            fields.push_back(line.substr(start, tab - start));
            start = tab + 1;
        }
        fields.push_back(line.substr(start));
        ClassEntry e;
        try {
            e.class_id = std::stoi(fields[0]);
            e.seen = std::stoi(fields[1]) != 0;
        } catch (const std::exception&) {
            throw FileError("registry: malformed line: " + line);
        }
        e.name = fields[2];
        e.description = fields[3];
        entries.push_back(std::move(e));
    }
    return Registry(std::move(entries));
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens) {
    Vocabulary v;
    v.tokens_ = std::move(tokens);
    for (int i = 0; i < static_cast<int>(v.tokens_.size()); ++i) {
        if (v.index_.count(v.tokens_[static_cast<size_t>(i)]))
            throw ConfigError("vocabulary: duplicate token '" + v.tokens_[static_cast<size_t>(i)] + "'");
        v.index_[v.tokens_[static_cast<size_t>(i)]] = i + 2;
    }
    return v;
}

Vocabulary Vocabulary::build(const Registry& registry) {
    std::vector<std::string> tokens;
    std::unordered_map<std::string, bool> present;
    auto take = [&](const std::string& text) {
        for (auto& w : split_words(text)) {
            if (!present.count(w)) {
                present[w] = true;
                tokens.push_back(w);
            }
        }
    };
    for (const auto& e : registry.entries()) {
        take(e.name);
        take(e.description);
    }
    return from_tokens(std::move(tokens));
}

int Vocabulary::id(const std::string& word) const {
    auto it = index_.find(word);
    return it == index_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::word(int id) const {
    static const std::string pad = "<pad>", unk = "<unk>";
    if (id == kPad) return pad;
    if (id == kUnk) return unk;
    if (id < 2 || id >= size()) throw IndexError("vocabulary: id " + std::to_string(id) + " out of range");
    return tokens_[static_cast<size_t>(id - 2)];
}

std::string Vocabulary::serialize() const {
    std::ostringstream os;
    for (const auto& t : tokens_) os << t << "\n";
    return os.str();
}

Vocabulary Vocabulary::parse(const std::string& text) {
    std::istringstream is(text);
    std::string line;
    std::vector<std::string> tokens;
    while (std::getline(is, line))
        if (!line.empty()) tokens.push_back(line);
    return from_tokens(std::move(tokens));
}

std::vector<std::string> split_words(const std::string& text) {
    std::vector<std::string> words;
    std::string cur;
    for (char ch : text) {
        const auto c = static_cast<unsigned char>(ch);
        if (std::isalnum(c)) {
            cur.push_back(static_cast<char>(std::tolower(c)));
        } else if (!cur.empty()) {
            words.push_back(cur);
            cur.clear();
        }
    }
    if (!cur.empty()) words.push_back(cur);
    return words;
}

TokenSequence tokenize(const Vocabulary& vocab, const std::string& text, int max_len) {
    TokenSequence seq;
    for (const auto& w : split_words(text)) {
        if (static_cast<int>(seq.ids.size()) >= max_len) break;
        seq.ids.push_back(vocab.id(w));
    }
    return seq;
}

TokenSequence assemble_token(const Vocabulary& vocab, const ClassEntry& entry,
                             bool use_description, int max_len) {
    TokenSequence seq = tokenize(vocab, entry.name, max_len);
    if (use_description) {
        TokenSequence desc = tokenize(vocab, entry.description, max_len);
        for (int id : desc.ids) {
            if (seq.length() >= max_len) break;
            seq.ids.push_back(id);
        }
    }
    if (seq.ids.empty())
        throw ConfigError("assemble_token: class '" + entry.name + "' produced no tokens");
    return seq;
}

std::vector<TokenSequence> zero_shot_tokens(const Vocabulary& vocab, const Registry& registry,
                                            LabelSpace space, bool use_description,
                                            const std::string& zero_shot_text, int max_len) {
    if (zero_shot_text != "name_desc" && zero_shot_text != "name_name")
        throw ConfigError("zero_shot_text must be name_desc or name_name, got '" + zero_shot_text + "'");
    std::vector<TokenSequence> out;
    const int limit = space == LabelSpace::SeenOnly ? registry.seen_count() : registry.total();
    for (int c = 0; c < limit; ++c) {
        const auto& e = registry.entry(c);
        if (zero_shot_text == "name_name") {
            TokenSequence seq = tokenize(vocab, e.name, max_len);
            TokenSequence again = tokenize(vocab, e.name, max_len);
            for (int id : again.ids) {
                if (seq.length() >= max_len) break;
                seq.ids.push_back(id);
            }
            out.push_back(std::move(seq));
        } else {
            out.push_back(assemble_token(vocab, e, use_description, max_len));
        }
    }
    return out;
}

}  // namespace senla
