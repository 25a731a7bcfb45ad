#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include "langchange/dataset.hpp"

namespace test_support {

inline const std::string kDataDir = LANGCHANGE_TEST_DATA_DIR;

inline const langchange::Dataset& dataset() {
    static const langchange::Dataset d = langchange::load_dataset(kDataDir);
    return d;
}

inline const langchange::LanguageHistory& language(const std::string& name) {
    for (const auto& h : dataset().histories)
        if (h.name == name) return h;
    throw std::runtime_error("no language " + name);
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::abs(b); }

}  // namespace test_support
