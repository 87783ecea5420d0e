#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace waa {

// Base class of every error thrown by the library.
class error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class invalid_argument_error : public error {
 public:
  using error::error;
};

// A signal, prediction or observation outside its declared space.
class domain_error : public error {
 public:
  using error::error;
};

class unsupported_error : public error {
 public:
  using error::error;
};

class resource_limit_error : public error {
 public:
  resource_limit_error(const std::string& what, int level) : error(what), level_(level) {}
  int level() const noexcept { return level_; }

 private:
  int level_;
};

// Engine rounds were driven out of protocol order.
class sequencing_error : public error {
 public:
  using error::error;
};

// Operation requires a property (e.g. convexity) the arguments lack.
class contract_error : public error {
 public:
  using error::error;
};

class insufficient_data_error : public error {
 public:
  using error::error;
};

class config_error : public error {
 public:
  config_error(std::string field, const std::string& what)
      : error(field.empty() ? what : field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 protected:
  // Message used verbatim.
  struct verbatim_t {};
  config_error(std::string field, const std::string& what, verbatim_t) : error(what), field_(std::move(field)) {}

 private:
  std::string field_;
};

// A checked inequality failed. `round` is 0 when the check is not per-round.
class invariant_violation : public error {
 public:
  invariant_violation(std::string check, std::size_t round, const std::string& what)
      : error(what), check_(std::move(check)), round_(round) {}
  const std::string& check() const noexcept { return check_; }
  std::size_t round() const noexcept { return round_; }

 private:
  std::string check_;
  std::size_t round_;
};

}  // namespace waa
