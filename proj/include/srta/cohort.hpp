#pragma once
// Labelled synthetic cohorts: personas with a latent temperament answer
// generated questionnaires, and the persona's dominant dimension is the label.
//
// Answer model. For a question of type A/B let q = w_A / (w_A + w_B)
// (0.5 when both weights are zero). The probability of answering Yes
// (granting A) is
//
//   Majority:      (1 - noise) * step(q) + noise * 0.5,  step(q) = 1, 0.5, 0 for q >, =, < 0.5
//   Proportional:  (1 - noise) * q       + noise * 0.5
//
// Majority is the default: with noise 0 every answer follows the persona's
// stronger preference, so the dominant dimension wins all 20 of its
// questions and plain bin counting recovers every label.

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <memory>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "srta/dimension.hpp"
#include "srta/emotion.hpp"
#include "srta/encoding.hpp"
#include "srta/error.hpp"
#include "srta/neural_net.hpp"
#include "srta/question_bank.hpp"
#include "srta/records.hpp"
#include "srta/rng.hpp"
#include "srta/session.hpp"

namespace srta {

enum class AnswerModel { Majority, Proportional };

// Argmax of three bin weights or counts, ties broken NS > RD > HA.
template <typename T>
Dimension dominant(const std::array<T, 3>& values) {
    Dimension best = Dimension::NS;
    for (Dimension d : {Dimension::RD, Dimension::HA})
        if (values[index_of(d)] > values[index_of(best)]) best = d;
    return best;
}

inline std::string_view disposition_for(Dimension d) {
    switch (d) {
        case Dimension::HA: return "tense-negative";
        case Dimension::RD: return "calm-positive";
        case Dimension::NS: return "excited-positive";
    }
    return "neutral";
}

struct Persona {
    std::array<double, 3> weights{1.0 / 3, 1.0 / 3, 1.0 / 3};  // indexed by Dimension, sums to 1
    double latency_mean_ms = 3000.0;
    double latency_sd_ms = 600.0;
    std::string disposition = "neutral";
    double noise = 0.0;

    Dimension label() const { return dominant(weights); }
    EmotionPersona emotion() const { return {disposition, noise}; }

    friend bool operator==(const Persona&, const Persona&) = default;
};

// Weights are a symmetric Dirichlet(1, 1, 1) draw (normalized Exponential(1)
// variates). Latency mean ~ U[2000, 7000] ms, sd ~ U[300, 1200] ms. The
// emotion disposition follows the dominant dimension.
inline Persona sample_persona(Rng& rng, double noise = 0.0) {
    if (!(noise >= 0.0 && noise <= 1.0)) fail(ErrorCode::Domain, "noise must lie in [0, 1]");
    Persona p;
    double sum = 0.0;
    for (double& w : p.weights) sum += (w = rng.exponential());
    for (double& w : p.weights) w /= sum;
    p.latency_mean_ms = rng.uniform(2000.0, 7000.0);
    p.latency_sd_ms = rng.uniform(300.0, 1200.0);
    p.disposition = std::string(disposition_for(p.label()));
    p.noise = noise;
    return p;
}

inline Persona sample_persona(std::uint64_t seed, double noise = 0.0) {
    Rng rng(seed);
    return sample_persona(rng, noise);
}

inline double probability_yes(const Persona& p, QuestionType t, AnswerModel model = AnswerModel::Majority) {
    const double a = p.weights[index_of(t.first())];
    const double b = p.weights[index_of(t.second())];
    const double q = (a + b) > 0.0 ? a / (a + b) : 0.5;
    const double pref = model == AnswerModel::Proportional ? q : (q > 0.5 ? 1.0 : (q < 0.5 ? 0.0 : 0.5));
    return (1.0 - p.noise) * pref + p.noise * 0.5;
}

// Answer, latency and emotion for one question.
struct SyntheticAnswer {
    AnswerValue answer;
    std::int64_t latency_ms;
    EmotionSample emotion;
};

inline SyntheticAnswer synthesize_answer(const Persona& p, const Question& q, Rng& rng, std::uint64_t emotion_seed,
                                         AnswerModel model = AnswerModel::Majority) {
    SyntheticAnswer s;
    s.answer = rng.uniform() < probability_yes(p, q.qtype, model) ? AnswerValue::Yes : AnswerValue::No;
    s.latency_ms = clamp_latency(std::llround(rng.normal(p.latency_mean_ms, p.latency_sd_ms)));
    s.emotion = simulate_emotion(p.emotion(), q, s.answer, emotion_seed);
    return s;
}

struct GeneratedSession {
    std::vector<Question> questionnaire;
    std::vector<AnswerRecord> records;  // 30, one per selected question
    Dimension label = Dimension::HA;
};

inline GeneratedSession generate_session(const Persona& p, const QuestionBank& bank, std::uint64_t seed,
                                         AnswerModel model = AnswerModel::Majority, double disqualify_below = 0.5) {
    GeneratedSession g;
    g.questionnaire = select_questionnaire(bank, seed);
    g.label = p.label();
    Rng rng(derive_seed(seed, 0x616e73ULL));
    const std::uint64_t emotion_seed = derive_seed(seed, 0x656d6fULL);
    g.records.reserve(g.questionnaire.size());
    for (const auto& q : g.questionnaire) {
        const SyntheticAnswer s = synthesize_answer(p, q, rng, emotion_seed, model);
        g.records.push_back(make_record(q.id, q.qtype, s.answer, s.latency_ms, s.emotion,
                                        is_emotion_disqualified(s.emotion, disqualify_below)));
    }
    return g;
}

inline std::vector<double> one_hot(Dimension d) {
    std::vector<double> t(3, 0.0);
    t[index_of(d)] = 1.0;
    return t;
}

struct Cohort {
    nn::Dataset data;
    std::vector<Dimension> labels;
    std::array<std::size_t, 3> class_counts{};
};

// Session i uses persona seed derive(seed, 2i) and session seed derive(seed, 2i + 1).
inline Cohort generate_cohort(std::size_t n, double noise, std::uint64_t seed, const QuestionBank& bank,
                              AnswerModel model = AnswerModel::Majority) {
    if (n < 1) fail(ErrorCode::Domain, "cohort size must be at least 1");
    Cohort c;
    c.data.features.reserve(n);
    c.data.targets.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Persona p = sample_persona(derive_seed(seed, 2 * i), noise);
        const GeneratedSession g = generate_session(p, bank, derive_seed(seed, 2 * i + 1), model);
        c.data.features.push_back(encode_session(g.records));
        c.data.targets.push_back(one_hot(g.label));
        c.labels.push_back(g.label);
        ++c.class_counts[index_of(g.label)];
    }
    return c;
}

// Bin-counting baseline read straight from encoded features: each block's
// type and answer give the granted dimension; the fullest bin wins.
inline Dimension bin_count_label(std::span<const double> features) {
    if (features.size() != kFeatureCount) fail(ErrorCode::Shape, "expected a 270-feature row");
    std::array<int, 3> bins{};
    for (std::size_t b = 0; b < kQuestionnaireLength; ++b) {
        const double* block = &features[b * kBlockWidth];
        std::size_t type = 0;
        while (type < 6 && block[type] != 1.0) ++type;
        if (type == 6) fail(ErrorCode::Validation, "feature block " + std::to_string(b) + " has no question type");
        const QuestionType t(QuestionType::all()[type]);
        ++bins[index_of(block[6] > 0.0 ? t.first() : t.second())];
    }
    return dominant(bins);
}

inline double bin_count_accuracy(const nn::Dataset& data, const std::vector<std::size_t>& rows) {
    if (rows.empty()) fail(ErrorCode::Empty, "oracle accuracy over an empty split");
    std::size_t hits = 0;
    for (std::size_t i : rows)
        if (index_of(bin_count_label(data.features[i])) == data.label(i)) ++hits;
    return static_cast<double>(hits) / static_cast<double>(rows.size());
}

// ---------------------------------------------------------------- export

// Header "f0,...,f269,label", then one row per session: features with 17
// significant digits and the label as HA, RD or NS.
inline void write_cohort_csv(std::ostream& out, const nn::Dataset& data) {
    const std::size_t width = data.features.empty() ? kFeatureCount : data.features.front().size();
    for (std::size_t i = 0; i < width; ++i) out << 'f' << i << ',';
    out << "label\n";
    char buf[32];
    for (std::size_t r = 0; r < data.size(); ++r) {
        for (double v : data.features[r]) {
            std::snprintf(buf, sizeof buf, "%.17g", v);
            out << buf << ',';
        }
        out << code_of(static_cast<Dimension>(data.label(r))) << '\n';
    }
}

inline nn::Dataset read_cohort_csv(std::istream& in) {
    nn::Dataset data;
    std::string line;
    if (!std::getline(in, line)) fail(ErrorCode::Parse, "cohort file is empty");
    std::size_t width = 0;
    for (char ch : line) width += ch == ',';
    if (width == 0 || line.substr(line.find_last_of(',') + 1).rfind("label", 0) != 0)
        fail(ErrorCode::Parse, "cohort header must end with 'label'");
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<double> row;
        row.reserve(width);
        std::stringstream ss(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() != width + 1)
            fail(ErrorCode::Parse, "cohort line " + std::to_string(lineno) + ": expected " + std::to_string(width + 1) + " fields");
        try {
            for (std::size_t i = 0; i < width; ++i) row.push_back(std::stod(cells[i]));
        } catch (const std::logic_error&) {
            fail(ErrorCode::Parse, "cohort line " + std::to_string(lineno) + ": bad number");
        }
        auto d = parse_dimension(cells.back());
        if (!d) fail(ErrorCode::Parse, "cohort line " + std::to_string(lineno) + ": bad label '" + cells.back() + "'");
        data.features.push_back(std::move(row));
        data.targets.push_back(one_hot(*d));
    }
    return data;
}

// ---------------------------------------------------------------- full run

// Drives a live session engine with a persona: no skips, emotion-disqualified
// answers get their revalidation. Question display times advance by each
// answer's latency plus a fixed 500 ms gap.
inline Session run_synthetic_session(const Persona& p, std::shared_ptr<const QuestionBank> bank,
                                     std::uint64_t seed, std::string username = "synthetic",
                                     AnswerModel model = AnswerModel::Majority, SessionConfig config = {}) {
    Session s("sim-" + std::to_string(seed), std::move(username), std::move(bank), seed, config);
    Rng rng(derive_seed(seed, 0x616e73ULL));
    const std::uint64_t emotion_seed = derive_seed(seed, 0x656d6fULL);
    std::int64_t clock = 0;
    while (s.state() == SessionState::Active) {
        const SyntheticAnswer a = synthesize_answer(p, s.current_question(), rng, emotion_seed, model);
        s.submit_answer(a.answer, clock, clock + a.latency_ms, a.emotion);
        clock += a.latency_ms + 500;
    }
    return s;
}

}  // namespace srta
