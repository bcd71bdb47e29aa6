#include "curator/rng.hpp"

#include "curator/hash.hpp"

namespace curator {

SplitMix64 record_rng(std::uint64_t global_seed, std::string_view record_id,
                      std::string_view stage_tag) {
    // Fold the id and stage tag into the seed with a separator byte that
    // does not occur in well-formed ids or tags, so ("a","bc") and
    // ("ab","c") derive distinct streams.
    std::uint64_t h = fnv1a64(record_id);
    h = fnv1a64("\x1f", h);
    h = fnv1a64(stage_tag, h);
    h = fnv1a64("\x1f", h);
    return SplitMix64(h ^ (global_seed * 0x9e3779b97f4a7c15ull));
}

}  // namespace curator
