// hohmm/errors.h

#ifndef HOHMM_ERRORS_H_
#define HOHMM_ERRORS_H_

#include <stdexcept>
#include <string>

namespace hohmm {

// Malformed input: bad files, dimension mismatches, invalid configurations.
// The CLI maps this to exit code 2.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A computation produced unusable numbers (NaN likelihoods, impossible
// observations during training). The CLI maps this to exit code 3.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace hohmm

#endif  // HOHMM_ERRORS_H_
