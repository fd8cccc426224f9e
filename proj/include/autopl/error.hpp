#pragma once

#include <stdexcept>
#include <string>

namespace autopl
{

// Bad input data: missing columns, unparsable files, degenerate datasets.
class DataError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

// A fit or training loop could not proceed (non-finite loss, dead-end sampler).
class TrainingError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

// Checkpoint or config file with an unexpected version or layout.
class FormatError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

} // namespace autopl
