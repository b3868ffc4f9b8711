#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace qba {

// Base for every error the library raises. The category decides the CLI
// exit status.
class Error : public std::runtime_error {
public:
    enum class Category { config, data, numeric };

    Error(Category category, const std::string& what)
        : std::runtime_error(what), category_(category) {}

    Category category() const noexcept { return category_; }

private:
    Category category_;
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(Category::config, what) {}
};

class DataError : public Error {
public:
    explicit DataError(const std::string& what) : Error(Category::data, what) {}
};

class NumericError : public Error {
public:
    explicit NumericError(const std::string& what) : Error(Category::numeric, what) {}
};

// Design matrix is not of full column rank on the weighted support.
class RankDeficiencyError : public NumericError {
public:
    explicit RankDeficiencyError(std::vector<std::string> columns)
        : NumericError(describe(columns)), columns_(std::move(columns)) {}

    const std::vector<std::string>& columns() const noexcept { return columns_; }

private:
    static std::string describe(const std::vector<std::string>& columns) {
        std::string msg = "design matrix is rank deficient; collinear columns:";
        for (const auto& c : columns) msg += " " + c;
        return msg;
    }

    std::vector<std::string> columns_;
};

// Some predicted selection probability fell below the positivity floor.
class ExtremeWeightError : public NumericError {
public:
    ExtremeWeightError(std::vector<std::size_t> records, double floor)
        : NumericError(describe(records, floor)), records_(std::move(records)) {}

    const std::vector<std::size_t>& records() const noexcept { return records_; }

private:
    static std::string describe(const std::vector<std::size_t>& records, double floor) {
        std::string msg = "selection probability below " + std::to_string(floor) + " for " +
                          std::to_string(records.size()) + " record(s):";
        std::size_t shown = 0;
        for (auto r : records) {
            if (shown++ == 10) {
                msg += " ...";
                break;
            }
            msg += " " + std::to_string(r);
        }
        return msg;
    }

    std::vector<std::size_t> records_;
};

}  // namespace qba
