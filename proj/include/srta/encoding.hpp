#pragma once
// Session -> fixed-length feature vector for the network.
//
// Each of the 30 standard answers contributes a 9-wide block:
//   [one-hot question type (canonical order, 6)] [+1 Yes / -1 No] [valence] [arousal]
// giving 270 features, all within [-1, 1].

#include <span>
#include <vector>

#include "srta/error.hpp"
#include "srta/question_bank.hpp"
#include "srta/records.hpp"

namespace srta {

inline constexpr std::size_t kBlockWidth = 9;
inline constexpr std::size_t kFeatureCount = kQuestionnaireLength * kBlockWidth;  // 270

inline std::vector<double> encode_session(std::span<const AnswerRecord> records) {
    if (records.size() != kQuestionnaireLength)
        fail(ErrorCode::Shape, "encoding needs exactly 30 standard answers, got " + std::to_string(records.size()));
    std::vector<double> x(kFeatureCount, 0.0);
    for (std::size_t i = 0; i < records.size(); ++i) {
        const AnswerRecord& r = records[i];
        double* block = &x[i * kBlockWidth];
        block[r.qtype.index()] = 1.0;
        block[6] = r.answer == AnswerValue::Yes ? 1.0 : -1.0;
        block[7] = r.emotion.valence;
        block[8] = r.emotion.arousal;
    }
    return x;
}

}  // namespace srta
