#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace xwalk
{

class InvalidArgument : public std::invalid_argument
{
public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when the traffic world reaches a physically impossible state
/// (overlapping vehicles). Always a bug, never a trial outcome.
class IntegrityError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// The input source ran dry before the trial reached an outcome.
class ProtocolError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

class SessionAbort : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

class InvalidSpec : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

class NotFound : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

class Conflict : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

class SchemaMismatch : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

class EstimationError : public std::runtime_error
{
public:
  EstimationError(const std::string & what, std::vector<std::string> columns)
  : std::runtime_error(what), columns_(std::move(columns))
  {
  }

  const std::vector<std::string> & columns() const noexcept { return columns_; }

private:
  std::vector<std::string> columns_;
};

}  // namespace xwalk
