#pragma once

#include <stdexcept>

namespace qid {

/// The characteristic function dropped below the numerical trust floor
/// somewhere on the evaluation grid; continuous phase tracking (and every
/// criterion built on it) is meaningless past a zero.
class zero_cf_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A query point is not a node of the trace grid.
class off_grid_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Spectral recovery detected that the law is not carried by the unit lattice
/// (plus an optional Gaussian component).
class non_lattice_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Analysis configuration failed validation; the message names the field.
class config_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Filesystem output failure.
class io_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace qid
