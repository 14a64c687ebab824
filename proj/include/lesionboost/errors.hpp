#pragma once
#include <stdexcept>
#include <string>
#include <utility>

namespace lesionboost {

// Every failure raised by the library carries a category string so the CLI
// can emit one machine-parsable line: "error: <category>: <message>".
class error : public std::runtime_error {
  public:
    error(std::string category, const std::string& what)
        : std::runtime_error(category + ": " + what), category_(std::move(category)) {}

    const std::string& category() const noexcept { return category_; }

  private:
    std::string category_;
};

#define LESIONBOOST_ERROR_CLASS(name)                                          \
    class name : public error {                                                \
      public:                                                                  \
        explicit name(const std::string& what) : error(#name, what) {}         \
    }

LESIONBOOST_ERROR_CLASS(io_error);
LESIONBOOST_ERROR_CLASS(schema_error);
LESIONBOOST_ERROR_CLASS(integrity_error);
LESIONBOOST_ERROR_CLASS(range_error);
LESIONBOOST_ERROR_CLASS(input_error);
LESIONBOOST_ERROR_CLASS(parameter_error);
LESIONBOOST_ERROR_CLASS(catalog_error);
LESIONBOOST_ERROR_CLASS(sampling_error);
LESIONBOOST_ERROR_CLASS(training_error);
LESIONBOOST_ERROR_CLASS(data_error);
LESIONBOOST_ERROR_CLASS(shape_error);
LESIONBOOST_ERROR_CLASS(metric_error);
LESIONBOOST_ERROR_CLASS(validation_error);

#undef LESIONBOOST_ERROR_CLASS

} // namespace lesionboost
