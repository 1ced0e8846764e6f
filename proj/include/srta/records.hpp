#pragma once
// Per-question capture: the answer, the emotion estimate and the latency.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "srta/dimension.hpp"
#include "srta/error.hpp"

namespace srta {

enum class AnswerValue { Yes, No };

inline std::string_view to_string(AnswerValue a) { return a == AnswerValue::Yes ? "Yes" : "No"; }

inline AnswerValue parse_answer(std::string_view s) {
    if (s == "Yes" || s == "yes") return AnswerValue::Yes;
    if (s == "No" || s == "no") return AnswerValue::No;
    fail(ErrorCode::Validation, "answer must be Yes or No, got '" + std::string(s) + "'");
}

// Yes grants the first dimension of the pair, No the second.
inline constexpr Dimension granted_dimension(QuestionType t, AnswerValue a) {
    return a == AnswerValue::Yes ? t.first() : t.second();
}

struct EmotionSample {
    double valence = 0.0;     // [-1, 1]
    double arousal = 0.0;     // [-1, 1]
    double confidence = 1.0;  // [0, 1]

    bool valid() const {
        return std::isfinite(valence) && std::isfinite(arousal) && std::isfinite(confidence) &&
               valence >= -1.0 && valence <= 1.0 && arousal >= -1.0 && arousal <= 1.0 &&
               confidence >= 0.0 && confidence <= 1.0;
    }

    friend bool operator==(const EmotionSample&, const EmotionSample&) = default;
};

inline void require_valid(const EmotionSample& e) {
    if (!e.valid())
        fail(ErrorCode::Validation, "emotion sample out of range (valence/arousal in [-1,1], confidence in [0,1])");
}

inline constexpr std::int64_t kMinLatencyMs = 200;
inline constexpr std::int64_t kMaxLatencyMs = 10000;

inline constexpr std::int64_t clamp_latency(std::int64_t ms) {
    return std::clamp(ms, kMinLatencyMs, kMaxLatencyMs);
}

struct AnswerRecord {
    std::string question_id;
    QuestionType qtype;
    AnswerValue answer = AnswerValue::Yes;
    std::int64_t latency_ms = kMinLatencyMs;
    EmotionSample emotion;
    Dimension granted = Dimension::HA;
    bool flagged = false;  // emotion disqualified; a same-type revalidation was queued

    friend bool operator==(const AnswerRecord&, const AnswerRecord&) = default;
};

inline AnswerRecord make_record(std::string question_id, QuestionType qtype, AnswerValue answer,
                                std::int64_t latency_ms, EmotionSample emotion, bool flagged = false) {
    return AnswerRecord{std::move(question_id), qtype, answer, clamp_latency(latency_ms),
                        emotion, granted_dimension(qtype, answer), flagged};
}

inline void to_json(nlohmann::json& j, const EmotionSample& e) {
    j = {{"valence", e.valence}, {"arousal", e.arousal}, {"confidence", e.confidence}};
}

inline void from_json(const nlohmann::json& j, EmotionSample& e) {
    e.valence = j.at("valence").get<double>();
    e.arousal = j.at("arousal").get<double>();
    e.confidence = j.at("confidence").get<double>();
}

inline void to_json(nlohmann::json& j, const AnswerRecord& r) {
    j = {{"question_id", r.question_id},
         {"type", r.qtype.code()},
         {"answer", to_string(r.answer)},
         {"latency_ms", r.latency_ms},
         {"emotion", r.emotion},
         {"granted", code_of(r.granted)},
         {"flagged", r.flagged}};
}

}  // namespace srta
