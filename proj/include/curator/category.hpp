#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>

namespace curator {

enum class Category : std::uint8_t {
    math = 0,
    code,
    science,
    instruction_follow,
    multiturn,
    other,
};

inline constexpr std::size_t kCategoryCount = 6;

inline constexpr std::array<Category, kCategoryCount> kAllCategories = {
    Category::math,     Category::code,      Category::science,
    Category::instruction_follow, Category::multiturn, Category::other,
};

std::string_view category_name(Category c);
std::optional<Category> parse_category(std::string_view name);

// Inclusive native score range: [0,5] for science, [0,1] for everything else.
struct ScoreScale {
    double min = 0.0;
    double max = 1.0;
};

ScoreScale native_scale(Category c);

// Default strict pass thresholds (a response passes iff score > threshold).
double default_pass_threshold(Category c);

// Categories whose easy queries survive a 50% lottery instead of being dropped.
bool is_conversational(Category c);

}  // namespace curator
