#pragma once

#include <stdexcept>
#include <string>

namespace qoc {

// Exit-code contract used by the CLI: argument/usage errors map to 1,
// data and format errors to 2, unreachable generation targets to 3.

class argument_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class data_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class training_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class target_unreachable_error : public std::runtime_error {
public:
    target_unreachable_error(const std::string& msg, double best_max_abs_dot)
        : std::runtime_error(msg), best_max_abs_dot_(best_max_abs_dot) {}

    double best_max_abs_dot() const noexcept { return best_max_abs_dot_; }

private:
    double best_max_abs_dot_;
};

}  // namespace qoc
