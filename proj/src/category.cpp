#include "curator/category.hpp"

#include <stdexcept>

namespace curator {

std::string_view category_name(Category c) {
    switch (c) {
        case Category::math: return "math";
        case Category::code: return "code";
        case Category::science: return "science";
        case Category::instruction_follow: return "instruction_follow";
        case Category::multiturn: return "multiturn";
        case Category::other: return "other";
    }
    throw std::invalid_argument("category_name: bad enum value");
}

std::optional<Category> parse_category(std::string_view name) {
    for (Category c : kAllCategories)
        if (name == category_name(c)) return c;
    return std::nullopt;
}

ScoreScale native_scale(Category c) {
    switch (c) {
        case Category::science:
            return {0.0, 5.0};
        case Category::math:
        case Category::code:
        case Category::instruction_follow:
        case Category::multiturn:
        case Category::other:
            return {0.0, 1.0};
    }
    throw std::invalid_argument("native_scale: bad enum value");
}

double default_pass_threshold(Category c) {
    switch (c) {
        case Category::math:
        case Category::code:
        case Category::instruction_follow:
            return 0.99;
        case Category::science:
            return 4.99;
        case Category::multiturn:
        case Category::other:
            return 0.7;
    }
    throw std::invalid_argument("default_pass_threshold: bad enum value");
}

bool is_conversational(Category c) {
    return c == Category::multiturn || c == Category::other;
}

}  // namespace curator
