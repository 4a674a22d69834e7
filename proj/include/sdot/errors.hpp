#pragma once

#include <stdexcept>
#include <string>

namespace sdot {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed input file (PGM header, JSON config).
struct ParseError : Error {
    using Error::Error;
};

// A measure that cannot be normalized (all-zero image, mixture vanishing on its mask).
struct DegenerateMeasureError : Error {
    using Error::Error;
};

// Invalid arguments (non-positive extents, weight vectors off the simplex, ...).
struct ArgumentError : Error {
    using Error::Error;
};

// An operation that requires pairwise-distinct points was given coincident ones.
struct DiagonalError : Error {
    using Error::Error;
};

// An iterative solve ran out of iterations above its tolerance.
struct ConvergenceError : Error {
    using Error::Error;
};

// A Voronoi region with zero mass was encountered where the iteration needs
// a barycenter.
struct EmptyCellError : Error {
    explicit EmptyCellError(const std::string& msg, int iteration_index = -1)
        : Error(msg), iteration(iteration_index) {}
    int iteration;
};

}  // namespace sdot
