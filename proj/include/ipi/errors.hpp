#pragma once

#include <stdexcept>
#include <string>

namespace ipi {

/// Shape or volume does not fit the requested grid. `overflow_cells` is the
/// largest number of cells by which the footprint exceeds the usable area.
class OutOfBoundsError : public std::runtime_error {
public:
  OutOfBoundsError(const std::string& what, int overflow_cells)
      : std::runtime_error(what), overflow_cells_(overflow_cells) {}
  int overflow_cells() const noexcept { return overflow_cells_; }

private:
  int overflow_cells_;
};

class EmptySupportError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

class EmptyMaskError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

class UndefinedMetricError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

class CorruptDatasetError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace ipi
