#pragma once
// Question database: loading, validation, balanced selection and
// same-type replacement draws.

#include <algorithm>
#include <array>
#include <cstdint>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "srta/dimension.hpp"
#include "srta/error.hpp"
#include "srta/rng.hpp"

namespace srta {

inline constexpr std::size_t kQuestionnaireLength = 30;
inline constexpr int kMaxRevalidations = 6;

// Items drawn per type: 6 for each major, 4 for each minor, so every
// dimension leads exactly 10 of the 30 questions.
inline constexpr std::size_t selection_count(QuestionType t) { return t.major() ? 6 : 4; }

// A bank must hold enough of each type that every revalidation can still
// draw a fresh question.
inline constexpr std::size_t required_per_type(QuestionType t) {
    return selection_count(t) + static_cast<std::size_t>(kMaxRevalidations);
}

struct Question {
    std::string id;
    std::string text;
    QuestionType qtype;

    bool major() const { return qtype.major(); }

    friend bool operator==(const Question&, const Question&) = default;
};

class QuestionBank {
public:
    QuestionBank() = default;

    explicit QuestionBank(std::vector<Question> questions) : questions_(std::move(questions)) {
        validate();
    }

    const std::vector<Question>& questions() const { return questions_; }
    std::size_t size() const { return questions_.size(); }

    // Indices into questions() of every item of the given type, in file order.
    const std::vector<std::size_t>& of_type(QuestionType t) const { return by_type_[t.index()]; }

    const Question* find(const std::string& id) const {
        auto it = by_id_.find(id);
        return it == by_id_.end() ? nullptr : &questions_[it->second];
    }

private:
    void validate() {
        for (std::size_t i = 0; i < questions_.size(); ++i) {
            const Question& q = questions_[i];
            if (q.id.empty())
                fail(ErrorCode::Validation, "record " + std::to_string(i + 1) + ": empty id");
            if (q.text.empty())
                fail(ErrorCode::Validation, "record " + std::to_string(i + 1) + ": empty text for id '" + q.id + "'");
            if (!by_id_.emplace(q.id, i).second)
                fail(ErrorCode::Validation, "record " + std::to_string(i + 1) + ": duplicate id '" + q.id + "'");
            by_type_[q.qtype.index()].push_back(i);
        }
        for (auto k : QuestionType::all()) {
            QuestionType t(k);
            const std::size_t have = by_type_[t.index()].size();
            if (have < required_per_type(t))
                fail(ErrorCode::Capacity, "type " + t.code() + " has " + std::to_string(have) +
                                              " questions, needs at least " +
                                              std::to_string(required_per_type(t)));
        }
    }

    std::vector<Question> questions_;
    std::array<std::vector<std::size_t>, 6> by_type_;
    std::unordered_map<std::string, std::size_t> by_id_;
};

namespace detail {

inline std::string trim(std::string_view s) {
    const auto ws = " \t\r\n";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(ws);
    return std::string(s.substr(b, e - b + 1));
}

inline bool parse_class_flag(std::string_view flag, bool& major) {
    if (flag == "M") { major = true; return true; }
    if (flag == "m") { major = false; return true; }
    return false;
}

inline Question make_record(std::string id, std::string_view type, std::string_view flag,
                            std::string text, const std::string& where) {
    auto qt = QuestionType::parse(type);
    if (!qt) fail(ErrorCode::Parse, where + ": unknown question type '" + std::string(type) + "'");
    bool major = false;
    if (!parse_class_flag(flag, major))
        fail(ErrorCode::Parse, where + ": class must be 'M' or 'm', got '" + std::string(flag) + "'");
    if (major != qt->major())
        fail(ErrorCode::Validation, where + ": class '" + std::string(flag) + "' contradicts type " + qt->code());
    return Question{std::move(id), std::move(text), *qt};
}

inline std::vector<Question> parse_lines(std::istream& in) {
    std::vector<Question> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        const std::string where = "line " + std::to_string(lineno);
        // id|type|M-or-m|text ; the text keeps any further '|'.
        std::array<std::size_t, 3> bars{};
        std::size_t from = 0;
        for (auto& b : bars) {
            b = t.find('|', from);
            if (b == std::string::npos)
                fail(ErrorCode::Parse, where + ": expected 'id|type|M-or-m|text'");
            from = b + 1;
        }
        out.push_back(make_record(trim(t.substr(0, bars[0])),
                                  trim(t.substr(bars[0] + 1, bars[1] - bars[0] - 1)),
                                  trim(t.substr(bars[1] + 1, bars[2] - bars[1] - 1)),
                                  trim(t.substr(bars[2] + 1)), where));
    }
    return out;
}

inline std::vector<Question> parse_json(const std::string& body) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(body);
    } catch (const nlohmann::json::parse_error& e) {
        fail(ErrorCode::Parse, std::string("bank JSON: ") + e.what());
    }
    if (!doc.is_array()) fail(ErrorCode::Parse, "bank JSON: top level must be an array");
    std::vector<Question> out;
    for (std::size_t i = 0; i < doc.size(); ++i) {
        const auto& rec = doc[i];
        const std::string where = "record " + std::to_string(i);
        auto field = [&](const char* name) -> std::string {
            if (!rec.is_object() || !rec.contains(name) || !rec[name].is_string())
                fail(ErrorCode::Parse, where + ": missing string field '" + name + "'");
            return rec[name].get<std::string>();
        };
        out.push_back(make_record(field("id"), field("type"), field("class"), field("text"), where));
    }
    return out;
}

}  // namespace detail

enum class BankFormat { Auto, Lines, Json };

inline QuestionBank load_bank(std::istream& in, BankFormat format = BankFormat::Auto) {
    std::stringstream buf;
    buf << in.rdbuf();
    std::string body = buf.str();
    if (format == BankFormat::Auto) {
        const auto first = body.find_first_not_of(" \t\r\n");
        format = (first != std::string::npos && body[first] == '[') ? BankFormat::Json : BankFormat::Lines;
    }
    if (format == BankFormat::Json) return QuestionBank(detail::parse_json(body));
    std::istringstream lines(body);
    return QuestionBank(detail::parse_lines(lines));
}

inline void save_bank(std::ostream& out, const QuestionBank& bank) {
    out << "# id|type|M-or-m|text\n";
    for (const auto& q : bank.questions())
        out << q.id << '|' << q.qtype.code() << '|' << (q.major() ? 'M' : 'm') << '|' << q.text << '\n';
}

inline void save_bank_json(std::ostream& out, const QuestionBank& bank) {
    nlohmann::json doc = nlohmann::json::array();
    for (const auto& q : bank.questions())
        doc.push_back({{"id", q.id}, {"type", q.qtype.code()}, {"class", q.major() ? "M" : "m"}, {"text", q.text}});
    out << doc.dump(1) << '\n';
}

// Balanced questionnaire: per type, a seeded partial Fisher-Yates draw of the
// quota from that type's items (types in canonical order), then a full
// shuffle of the 30 picks with the same generator.
inline std::vector<Question> select_questionnaire(const QuestionBank& bank, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<Question> picked;
    picked.reserve(kQuestionnaireLength);
    for (auto k : QuestionType::all()) {
        QuestionType t(k);
        std::vector<std::size_t> pool = bank.of_type(t);
        const std::size_t quota = selection_count(t);
        if (pool.size() < quota)
            fail(ErrorCode::Capacity, "type " + t.code() + " cannot supply " + std::to_string(quota) + " questions");
        for (std::size_t i = 0; i < quota; ++i) {
            const std::size_t j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
            std::swap(pool[i], pool[j]);
            picked.push_back(bank.questions()[pool[i]]);
        }
    }
    rng.shuffle(picked.begin(), picked.end());
    return picked;
}

// Uniform draw among the bank's questions of qtype whose id is not excluded.
inline Question draw_revalidation(const QuestionBank& bank, QuestionType qtype,
                                  const std::unordered_set<std::string>& exclude, Rng& rng) {
    std::vector<std::size_t> fresh;
    for (std::size_t i : bank.of_type(qtype))
        if (!exclude.contains(bank.questions()[i].id)) fresh.push_back(i);
    if (fresh.empty())
        fail(ErrorCode::Exhaustion, "no unused " + qtype.code() + " question left in the bank");
    return bank.questions()[fresh[rng.below(fresh.size())]];
}

// Placeholder bank with per_type items of every type, ids Q0001.. in order.
inline QuestionBank make_synthetic_bank(std::size_t per_type = 200) {
    std::vector<Question> qs;
    qs.reserve(per_type * 6);
    std::size_t n = 0;
    for (auto k : QuestionType::all()) {
        QuestionType t(k);
        for (std::size_t i = 0; i < per_type; ++i) {
            ++n;
            std::string id = std::to_string(n);
            id = "Q" + std::string(id.size() < 4 ? 4 - id.size() : 0, '0') + id;
            qs.push_back({id,
                          "Placeholder situation " + std::to_string(i + 1) + " weighing " +
                              std::string(alias_of(t.first())) + " against " + std::string(alias_of(t.second())) + "?",
                          t});
        }
    }
    return QuestionBank(std::move(qs));
}

}  // namespace srta
