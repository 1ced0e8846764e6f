#pragma once
// Scores derived from a completed session and the Individual Worthiness Index:
//
//   IWI = (RP * T) * TT * (BT * C)
//
// RP in 1..6, TT in 1..5, BT in 1..4, T in [30/36, 1], C in [0, 1], so the raw
// index lies in [0, 120]; iwi_pct is the raw value over 120 clamped to
// [0.20, 1.00]. Leadership is reported alongside but does not enter the index.
//
// All functions here are pure.

#include <algorithm>
#include <array>
#include <cfenv>
#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "srta/dimension.hpp"
#include "srta/error.hpp"
#include "srta/records.hpp"
#include "srta/session.hpp"

namespace srta {

// ---------------------------------------------------------------- risk profile

// (primary, secondary) -> coefficient, by social valuation of the pair.
inline int risk_coefficient(Dimension primary, Dimension secondary) {
    using D = Dimension;
    if (primary == D::HA && secondary == D::RD) return 1;  // Averse Dependent
    if (primary == D::HA && secondary == D::NS) return 2;  // Averse Taker
    if (primary == D::RD && secondary == D::HA) return 3;  // Dependent Averse
    if (primary == D::RD && secondary == D::NS) return 4;  // Dependent Taker
    if (primary == D::NS && secondary == D::HA) return 5;  // Taker Averse
    if (primary == D::NS && secondary == D::RD) return 6;  // Taker Dependent
    fail(ErrorCode::Domain, "risk profile needs two distinct dimensions");
}

struct RiskProfile {
    Dimension primary = Dimension::HA;
    Dimension secondary = Dimension::RD;
    int coefficient = 1;
    std::array<int, 3> bin_counts{};  // indexed by Dimension

    std::string label() const {
        return std::string(alias_of(primary)) + " " + std::string(alias_of(secondary));
    }

    friend bool operator==(const RiskProfile&, const RiskProfile&) = default;
};

// Bins ordered by count, ties broken NS > RD > HA.
inline std::array<Dimension, 3> rank_bins(const std::array<int, 3>& counts) {
    std::array<Dimension, 3> order = kDimensions;
    std::sort(order.begin(), order.end(), [&](Dimension a, Dimension b) {
        const int ca = counts[index_of(a)], cb = counts[index_of(b)];
        return ca != cb ? ca > cb : tie_rank(a) < tie_rank(b);
    });
    return order;
}

inline RiskProfile risk_profile_from_counts(const std::array<int, 3>& counts) {
    const auto order = rank_bins(counts);
    return RiskProfile{order[0], order[1], risk_coefficient(order[0], order[1]), counts};
}

inline RiskProfile risk_profile(const std::vector<AnswerRecord>& records) {
    if (records.empty()) fail(ErrorCode::Empty, "risk profile needs at least one answer");
    std::array<int, 3> counts{};
    for (const auto& r : records) ++counts[index_of(r.granted)];
    return risk_profile_from_counts(counts);
}

// ---------------------------------------------------------------- truthfulness

// 30 / (30 + R): 1.0 with no revalidations, 30/36 at the budget of 6.
inline double truthfulness(int revalidations) {
    if (revalidations < 0 || revalidations > kMaxRevalidations)
        fail(ErrorCode::Domain, "revalidations must lie in [0, 6], got " + std::to_string(revalidations));
    const double n = static_cast<double>(kQuestionnaireLength);
    return n / (n + revalidations);
}

// ---------------------------------------------------------------- thinking type

enum class LatencyBand { XS = 1, S, M, L, XL };

inline std::string_view to_string(LatencyBand b) {
    switch (b) {
        case LatencyBand::XS: return "XS";
        case LatencyBand::S: return "S";
        case LatencyBand::M: return "M";
        case LatencyBand::L: return "L";
        case LatencyBand::XL: return "XL";
    }
    return "?";
}

struct LatencyModel {
    double mu_ms = 3000.0;
    double sigma_ms = 1000.0;
    // Averages outside [unusual_low_ms, unusual_high_ms] are flagged.
    double unusual_low_ms = 2000.0;
    double unusual_high_ms = 7000.0;

    // Interior band edges. One sigma wide each, the middle band centred on
    // mu: 1500/2500/3500/4500 ms with the defaults.
    std::array<double, 4> edges() const {
        return {mu_ms - 1.5 * sigma_ms, mu_ms - 0.5 * sigma_ms, mu_ms + 0.5 * sigma_ms, mu_ms + 1.5 * sigma_ms};
    }
};

struct ThinkingType {
    LatencyBand band = LatencyBand::M;
    int coefficient = 3;
    bool unusual = false;

    friend bool operator==(const ThinkingType&, const ThinkingType&) = default;
};

// Half-open bands [lo, hi) between the edges. The end bands are open, so very
// short averages stay XS and very long ones XL.
inline ThinkingType thinking_type(double avg_latency_ms, const LatencyModel& model = {}) {
    if (!(model.sigma_ms > 0.0)) fail(ErrorCode::Domain, "latency model needs sigma > 0");
    if (!(avg_latency_ms > 0.0) || !std::isfinite(avg_latency_ms))
        fail(ErrorCode::Domain, "average latency must be positive");
    const auto e = model.edges();
    LatencyBand band;
    if (avg_latency_ms < e[0]) band = LatencyBand::XS;
    else if (avg_latency_ms < e[1]) band = LatencyBand::S;
    else if (avg_latency_ms < e[2]) band = LatencyBand::M;
    else if (avg_latency_ms < e[3]) band = LatencyBand::L;
    else band = LatencyBand::XL;
    const bool unusual = avg_latency_ms < model.unusual_low_ms || avg_latency_ms > model.unusual_high_ms;
    return ThinkingType{band, static_cast<int>(band), unusual};
}

// ---------------------------------------------------------------- biometric type

enum class BiometricLabel { ContemptDisgust = 1, AngerFear, HappinessSadness, SurpriseNeutral };

inline std::string_view to_string(BiometricLabel l) {
    switch (l) {
        case BiometricLabel::ContemptDisgust: return "ContemptDisgust";
        case BiometricLabel::AngerFear: return "AngerFear";
        case BiometricLabel::HappinessSadness: return "HappinessSadness";
        case BiometricLabel::SurpriseNeutral: return "SurpriseNeutral";
    }
    return "?";
}

struct BiometricType {
    int category = 4;
    BiometricLabel label = BiometricLabel::SurpriseNeutral;

    friend bool operator==(const BiometricType&, const BiometricType&) = default;
};

inline BiometricType biometric_from_category(int category) {
    if (category < 1 || category > 4) fail(ErrorCode::Domain, "biometric category must lie in [1, 4]");
    return BiometricType{category, static_cast<BiometricLabel>(category)};
}

// Categorical method: fixed table over the eight basic emotions.
inline BiometricType biometric_type_categorical(std::string_view emotion) {
    struct Row { std::string_view name; int category; };
    static constexpr std::array<Row, 8> table{{
        {"Contempt", 1}, {"Disgust", 1},
        {"Anger", 2}, {"Fear", 2},
        {"Happiness", 3}, {"Sadness", 3},
        {"Surprise", 4}, {"Neutral", 4},
    }};
    for (const auto& row : table)
        if (row.name == emotion) return biometric_from_category(row.category);
    fail(ErrorCode::Validation, "unknown emotion label '" + std::string(emotion) + "'");
}

// Continuous method: quadrants of the valence-arousal plane, with zero
// assigned to the non-negative side.
inline BiometricType biometric_type_continuous(double valence, double arousal) {
    if (!(valence >= -1.0 && valence <= 1.0 && arousal >= -1.0 && arousal <= 1.0))
        fail(ErrorCode::Domain, "valence and arousal must lie in [-1, 1]");
    if (valence < 0.0) return biometric_from_category(arousal < 0.0 ? 1 : 2);
    return biometric_from_category(arousal < 0.0 ? 3 : 4);
}

// ---------------------------------------------------------------- leadership

struct LeadershipInputs {
    int education_level = 1;  // [1, 6]
    int job_level = 1;        // [1, 6]

    friend bool operator==(const LeadershipInputs&, const LeadershipInputs&) = default;
};

inline void require_valid(const LeadershipInputs& in) {
    if (in.education_level < 1 || in.education_level > 6 || in.job_level < 1 || in.job_level > 6)
        fail(ErrorCode::Domain, "education and job levels must lie in [1, 6]");
}

inline constexpr double kLeadershipMax = 120.0;

// (latency / mu) * education * job, clamped to [0, 120].
inline double leadership(double avg_latency_ms, const LeadershipInputs& in, const LatencyModel& model = {}) {
    if (!(avg_latency_ms > 0.0 && avg_latency_ms <= static_cast<double>(kMaxLatencyMs)))
        fail(ErrorCode::Domain, "average latency must lie in (0, 10000] ms");
    require_valid(in);
    if (!(model.mu_ms > 0.0)) fail(ErrorCode::Domain, "latency model needs mu > 0");
    const double ls = avg_latency_ms / model.mu_ms * in.education_level * in.job_level;
    return std::clamp(ls, 0.0, kLeadershipMax);
}

// ---------------------------------------------------------------- confidence

inline double session_confidence(const std::vector<AnswerRecord>& records) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& r : records) {
        if (r.flagged) continue;
        sum += r.emotion.confidence;
        ++n;
    }
    if (n == 0) fail(ErrorCode::Empty, "confidence needs at least one non-flagged record");
    return std::clamp(sum / static_cast<double>(n), 0.0, 1.0);
}

// Mean valence/arousal over non-flagged records.
inline EmotionSample session_emotion(const std::vector<AnswerRecord>& records) {
    EmotionSample m{0.0, 0.0, 0.0};
    std::size_t n = 0;
    for (const auto& r : records) {
        if (r.flagged) continue;
        m.valence += r.emotion.valence;
        m.arousal += r.emotion.arousal;
        m.confidence += r.emotion.confidence;
        ++n;
    }
    if (n == 0) fail(ErrorCode::Empty, "emotion aggregate needs at least one non-flagged record");
    const double d = static_cast<double>(n);
    return {std::clamp(m.valence / d, -1.0, 1.0), std::clamp(m.arousal / d, -1.0, 1.0),
            std::clamp(m.confidence / d, 0.0, 1.0)};
}

// ---------------------------------------------------------------- index

inline constexpr double kIwiMax = 120.0;
inline constexpr double kIwiPctFloor = 0.20;
inline constexpr double kIwiPctCeil = 1.00;

inline double iwi(int rp_coefficient, double truth, int tt_coefficient, int bt_category, double confidence) {
    return (rp_coefficient * truth) * tt_coefficient * (bt_category * confidence);
}

inline double iwi_percent(double iwi_raw) {
    return std::clamp(iwi_raw / kIwiMax, kIwiPctFloor, kIwiPctCeil);
}

struct ResultBundle {
    RiskProfile rp;
    double truthfulness = 1.0;
    double airt = 0.0;
    double avg_latency_ms = 0.0;
    ThinkingType tt;
    double leadership = 0.0;
    BiometricType bt;
    double confidence = 0.0;
    double iwi_raw = 0.0;
    double iwi_pct = kIwiPctFloor;

    friend bool operator==(const ResultBundle&, const ResultBundle&) = default;
};

inline ResultBundle compose_result(const RiskProfile& rp, int revalidations, double avg_latency,
                                   const BiometricType& bt, double confidence, const LeadershipInputs& inputs,
                                   const LatencyModel& model = {}) {
    ResultBundle b;
    b.rp = rp;
    b.truthfulness = truthfulness(revalidations);
    b.airt = rp.coefficient * b.truthfulness;
    b.avg_latency_ms = avg_latency;
    b.tt = thinking_type(avg_latency, model);
    b.leadership = leadership(avg_latency, inputs, model);
    b.bt = bt;
    b.confidence = confidence;
    b.iwi_raw = iwi(rp.coefficient, b.truthfulness, b.tt.coefficient, bt.category, confidence);
    b.iwi_pct = iwi_percent(b.iwi_raw);
    return b;
}

inline ResultBundle compute_result(const Session& session, const LeadershipInputs& inputs,
                                   const LatencyModel& model = {}) {
    if (session.state() != SessionState::Completed)
        fail(ErrorCode::State, "results need a completed session; session " + session.session_id() + " is " +
                                   std::string(to_string(session.state())));
    const auto& records = session.records();
    const EmotionSample mean = session_emotion(records);
    return compose_result(risk_profile(records), session.revalidations(), average_latency_ms(records),
                          biometric_type_continuous(mean.valence, mean.arousal), session_confidence(records),
                          inputs, model);
}

// ---------------------------------------------------------------- serialization

// Half-even rounding to 4 decimals; applied only when serializing.
inline double round4(double x) {
    const int saved = std::fegetround();
    std::fesetround(FE_TONEAREST);
    const double r = std::nearbyint(x * 10000.0) / 10000.0;
    std::fesetround(saved);
    return r;
}

inline void to_json(nlohmann::json& j, const ResultBundle& b) {
    j = nlohmann::json{
        {"risk_profile",
         {{"primary", code_of(b.rp.primary)},
          {"secondary", code_of(b.rp.secondary)},
          {"coefficient", b.rp.coefficient},
          {"label", b.rp.label()},
          {"bin_counts", {{"HA", b.rp.bin_counts[0]}, {"RD", b.rp.bin_counts[1]}, {"NS", b.rp.bin_counts[2]}}}}},
        {"truthfulness", round4(b.truthfulness)},
        {"airt", round4(b.airt)},
        {"avg_latency_ms", round4(b.avg_latency_ms)},
        {"thinking_type", {{"band", to_string(b.tt.band)}, {"coefficient", b.tt.coefficient}, {"unusual", b.tt.unusual}}},
        {"leadership", round4(b.leadership)},
        {"biometric_type", {{"category", b.bt.category}, {"label", to_string(b.bt.label)}}},
        {"confidence", round4(b.confidence)},
        {"iwi_raw", round4(b.iwi_raw)},
        {"iwi_pct", round4(b.iwi_pct)},
    };
}

inline void from_json(const nlohmann::json& j, ResultBundle& b) {
    try {
        const auto& rp = j.at("risk_profile");
        auto dim = [](const nlohmann::json& v) {
            auto d = parse_dimension(v.get<std::string>());
            if (!d) fail(ErrorCode::Validation, "unknown dimension in result");
            return *d;
        };
        b.rp.primary = dim(rp.at("primary"));
        b.rp.secondary = dim(rp.at("secondary"));
        b.rp.coefficient = rp.at("coefficient").get<int>();
        if (b.rp.coefficient != risk_coefficient(b.rp.primary, b.rp.secondary))
            fail(ErrorCode::Validation, "risk profile coefficient contradicts its dimensions");
        const auto& bins = rp.at("bin_counts");
        b.rp.bin_counts = {bins.at("HA").get<int>(), bins.at("RD").get<int>(), bins.at("NS").get<int>()};
        b.truthfulness = j.at("truthfulness").get<double>();
        b.airt = j.at("airt").get<double>();
        b.avg_latency_ms = j.at("avg_latency_ms").get<double>();
        const auto& tt = j.at("thinking_type");
        b.tt.coefficient = tt.at("coefficient").get<int>();
        if (b.tt.coefficient < 1 || b.tt.coefficient > 5) fail(ErrorCode::Validation, "thinking type out of range");
        b.tt.band = static_cast<LatencyBand>(b.tt.coefficient);
        if (tt.at("band").get<std::string>() != to_string(b.tt.band))
            fail(ErrorCode::Validation, "thinking type band contradicts its coefficient");
        b.tt.unusual = tt.at("unusual").get<bool>();
        b.leadership = j.at("leadership").get<double>();
        b.bt = biometric_from_category(j.at("biometric_type").at("category").get<int>());
        b.confidence = j.at("confidence").get<double>();
        b.iwi_raw = j.at("iwi_raw").get<double>();
        b.iwi_pct = j.at("iwi_pct").get<double>();
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::Validation, std::string("result bundle: ") + e.what());
    }
}

// The bundle as it reads back after serialization (reals rounded).
inline ResultBundle wire_rounded(ResultBundle b) {
    for (double* x : {&b.truthfulness, &b.airt, &b.avg_latency_ms, &b.leadership, &b.confidence, &b.iwi_raw, &b.iwi_pct})
        *x = round4(*x);
    return b;
}

}  // namespace srta
