#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace conpred {

// Families map onto CLI exit codes: config 2, data 3, training 4.
class config_error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class data_error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class training_error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class parse_error : public data_error {
  public:
    parse_error(std::size_t line, const std::string &reason)
        : data_error("line " + std::to_string(line) + ": " + reason), line_(line) {}

    [[nodiscard]] std::size_t line() const noexcept { return line_; }

  private:
    std::size_t line_;
};

class empty_file_error : public data_error {
  public:
    using data_error::data_error;
};

class length_mismatch_error : public data_error {
  public:
    using data_error::data_error;
};

class empty_interval_error : public data_error {
  public:
    using data_error::data_error;
};

class zero_first_close_error : public data_error {
  public:
    using data_error::data_error;
};

class missing_baseline_error : public data_error {
  public:
    explicit missing_baseline_error(const std::string &ticker)
        : data_error("no volume baseline for ticker '" + ticker + "'"), ticker_(ticker) {}

    [[nodiscard]] const std::string &ticker() const noexcept { return ticker_; }

  private:
    std::string ticker_;
};

class insufficient_reference_error : public data_error {
  public:
    using data_error::data_error;
};

class empty_train_set_error : public data_error {
  public:
    using data_error::data_error;
};

class too_few_eras_error : public data_error {
  public:
    using data_error::data_error;
};

class too_few_rows_error : public data_error {
  public:
    using data_error::data_error;
};

class non_finite_gradient_error : public training_error {
  public:
    using training_error::training_error;
};

class diverged_loss_error : public training_error {
  public:
    using training_error::training_error;
};

}  // namespace conpred
