#pragma once

#include <string>
#include <string_view>
#include <unordered_set>

#include "curator/config.hpp"
#include "curator/hash.hpp"
#include "curator/types.hpp"

namespace curator {

// Dedup key normalization: trim plus collapse of internal whitespace.
// Case is significant here (unlike decontamination).
std::string normalize_for_dedup(std::string_view query);

// Order-sensitive exact dedup: the first record with a given normalized query
// text wins. insert_if_new must be called in input order.
class DedupSet {
  public:
    // True when the query text was not seen before.
    bool insert_if_new(const QueryRecord& record);
    bool insert_key(const Digest128& key);
    static Digest128 key_for(const QueryRecord& record);
    std::size_t size() const { return seen_.size(); }

  private:
    std::unordered_set<Digest128, Digest128Hash> seen_;
};

// Fraction of code points outside ASCII; empty text is 0.
double unicode_ratio(std::string_view text);

// Hygiene verdict for one record's query text. Stage tag "filter".
SelectionDecision filter_hygiene(const QueryRecord& record,
                                 const PipelineConfig& config);

}  // namespace curator
