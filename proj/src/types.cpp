#include "curator/types.hpp"

#include <stdexcept>
#include <string>

namespace curator {

VerifyOutcome make_outcome(double score, double threshold, ScoreScale scale,
                           json detail) {
    if (!(score >= scale.min && score <= scale.max))
        throw std::invalid_argument("make_outcome: score " +
                                    std::to_string(score) +
                                    " outside native scale");
    VerifyOutcome out;
    out.score = score;
    out.pass = score > threshold;  // strict: equality does not pass
    out.detail = std::move(detail);
    return out;
}

std::string query_text(const QueryRecord& record) {
    std::string out;
    for (const Turn& t : record.turns) {
        if (t.assistant) continue;
        if (!out.empty()) out.push_back('\n');
        out += t.content;
    }
    return out;
}

}  // namespace curator
