#pragma once
// Valence-arousal provider contract and a deterministic simulator.
//
// A real video emotion recognizer samples snippets of 13 frames (about
// 400 ms) inside 64-frame sequences (about 2 s) and emits one
// valence/arousal estimate per snippet. Anything that honours the
// EmotionProvider interface can stand in for it; the service also accepts
// timelines computed on the client (see docs/api.md, emotion ingestion).

#include <algorithm>
#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "srta/error.hpp"
#include "srta/question_bank.hpp"
#include "srta/records.hpp"
#include "srta/rng.hpp"

namespace srta {

struct FrameWindow {
    static constexpr int frames_per_snippet = 13;
    static constexpr int sequence_length = 64;
    static constexpr std::int64_t sequence_span_ms = 2000;
    static constexpr double frame_period_ms = double(sequence_span_ms) / sequence_length;  // 31.25
    // Nominal snippet span; 13 frames at the frame period is 406.25 ms.
    static constexpr std::int64_t snippet_span_ms = 400;
};

struct TimedEmotion {
    std::int64_t t_ms = 0;
    EmotionSample sample;

    friend bool operator==(const TimedEmotion&, const TimedEmotion&) = default;
};

class EmotionTimeline {
public:
    EmotionTimeline() = default;

    explicit EmotionTimeline(std::vector<TimedEmotion> samples) : samples_(std::move(samples)) {
        for (std::size_t i = 0; i < samples_.size(); ++i) {
            require_valid(samples_[i].sample);
            if (i > 0 && samples_[i].t_ms <= samples_[i - 1].t_ms)
                fail(ErrorCode::Validation, "emotion timeline timestamps must be strictly increasing");
        }
    }

    const std::vector<TimedEmotion>& samples() const { return samples_; }
    bool empty() const { return samples_.empty(); }
    std::size_t size() const { return samples_.size(); }

    friend bool operator==(const EmotionTimeline&, const EmotionTimeline&) = default;

private:
    std::vector<TimedEmotion> samples_;
};

// Per-question reduction: plain means of each coordinate.
inline EmotionSample aggregate_window(const std::vector<TimedEmotion>& samples) {
    if (samples.empty()) fail(ErrorCode::Empty, "cannot aggregate an empty emotion timeline");
    EmotionSample m{0.0, 0.0, 0.0};
    for (const auto& s : samples) {
        m.valence += s.sample.valence;
        m.arousal += s.sample.arousal;
        m.confidence += s.sample.confidence;
    }
    const double n = static_cast<double>(samples.size());
    m.valence = std::clamp(m.valence / n, -1.0, 1.0);
    m.arousal = std::clamp(m.arousal / n, -1.0, 1.0);
    m.confidence = std::clamp(m.confidence / n, 0.0, 1.0);
    return m;
}

inline EmotionSample aggregate_window(const EmotionTimeline& timeline) {
    return aggregate_window(timeline.samples());
}

// Wire format: [{"t_ms": int, "valence": x, "arousal": y, "confidence": c}, ...]
inline EmotionTimeline parse_timeline(const nlohmann::json& arr) {
    if (!arr.is_array()) fail(ErrorCode::Validation, "emotion timeline must be a JSON array");
    std::vector<TimedEmotion> out;
    out.reserve(arr.size());
    try {
        for (const auto& e : arr) {
            TimedEmotion te;
            te.t_ms = e.at("t_ms").get<std::int64_t>();
            te.sample = e.get<EmotionSample>();
            out.push_back(te);
        }
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::Validation, std::string("emotion timeline: ") + e.what());
    }
    return EmotionTimeline(std::move(out));
}

inline nlohmann::json timeline_to_json(const EmotionTimeline& tl) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& s : tl.samples())
        arr.push_back({{"t_ms", s.t_ms},
                       {"valence", s.sample.valence},
                       {"arousal", s.sample.arousal},
                       {"confidence", s.sample.confidence}});
    return arr;
}

class EmotionProvider {
public:
    virtual ~EmotionProvider() = default;

    // Estimates for the capture window of one question. Implementations must
    // return at least one sample per snippet span and be callable
    // concurrently.
    virtual EmotionTimeline estimate(std::int64_t start_ms, std::int64_t end_ms) const = 0;
};

// Documented disposition table (docs/emotion_personas.md).
struct Disposition {
    std::string_view key;
    double valence;
    double arousal;
};

inline constexpr std::array<Disposition, 5> kDispositions{{
    {"calm-positive", 0.4, -0.3},
    {"excited-positive", 0.5, 0.5},
    {"tense-negative", -0.4, 0.4},
    {"flat-negative", -0.3, -0.4},
    {"neutral", 0.0, 0.0},
}};

inline const Disposition& find_disposition(std::string_view key) {
    for (const auto& d : kDispositions)
        if (d.key == key) return d;
    fail(ErrorCode::Validation, "unknown emotion disposition '" + std::string(key) + "'");
}

struct EmotionPersona {
    std::string disposition = "neutral";
    double noise = 0.0;  // [0, 1]
};

namespace detail {

// Disposition mean plus Gaussian noise of sd noise/2, clamped; confidence
// drops by noise * |z|.
inline EmotionSample draw_emotion(const EmotionPersona& persona, Rng& rng) {
    if (!(persona.noise >= 0.0 && persona.noise <= 1.0))
        fail(ErrorCode::Domain, "emotion noise must lie in [0, 1]");
    const Disposition& d = find_disposition(persona.disposition);
    const double sd = 0.5 * persona.noise;
    EmotionSample s;
    s.valence = std::clamp(d.valence + sd * rng.normal(), -1.0, 1.0);
    s.arousal = std::clamp(d.arousal + sd * rng.normal(), -1.0, 1.0);
    const double penalty = std::min(1.0, persona.noise * std::abs(rng.normal()));
    s.confidence = std::clamp(1.0 - penalty, 0.0, 1.0);
    return s;
}

}  // namespace detail

// Pure function of (persona, question, answer, seed).
inline EmotionSample simulate_emotion(const EmotionPersona& persona, const Question& question,
                                      AnswerValue answer, std::uint64_t seed) {
    const std::uint64_t stream = fnv1a64(question.id) ^ (answer == AnswerValue::Yes ? 0x59ULL : 0x4eULL);
    Rng rng(derive_seed(seed, stream));
    return detail::draw_emotion(persona, rng);
}

class SimulatedProvider final : public EmotionProvider {
public:
    SimulatedProvider(EmotionPersona persona, std::uint64_t seed)
        : persona_(std::move(persona)), seed_(seed) {
        find_disposition(persona_.disposition);
    }

    // One sample per snippet, stamped at the snippet's end.
    EmotionTimeline estimate(std::int64_t start_ms, std::int64_t end_ms) const override {
        if (end_ms <= start_ms) fail(ErrorCode::Domain, "capture window must end after it starts");
        const std::int64_t span = end_ms - start_ms;
        if (span < FrameWindow::snippet_span_ms)
            fail(ErrorCode::Domain, "capture window of " + std::to_string(span) +
                                        " ms is shorter than one snippet (" +
                                        std::to_string(FrameWindow::snippet_span_ms) + " ms)");
        std::vector<TimedEmotion> out;
        for (std::int64_t t = start_ms + FrameWindow::snippet_span_ms; t <= end_ms; t += FrameWindow::snippet_span_ms) {
            Rng rng(derive_seed(seed_, static_cast<std::uint64_t>(t)));
            out.push_back({t, detail::draw_emotion(persona_, rng)});
        }
        return EmotionTimeline(std::move(out));
    }

private:
    EmotionPersona persona_;
    std::uint64_t seed_;
};

}  // namespace srta
