#pragma once

#include <stdexcept>
#include <string>

namespace lstmdssm {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Malformed user input: files, arguments, empty sequences.
class InputError : public Error {
  public:
    using Error::Error;
};

/// A NaN or infinity appeared in a forward pass, gradient, or update.
class DivergenceError : public Error {
  public:
    using Error::Error;
};

/// A zero-norm embedding was fed to the cosine similarity.
class DegenerateEmbeddingError : public Error {
  public:
    using Error::Error;
};

}  // namespace lstmdssm
