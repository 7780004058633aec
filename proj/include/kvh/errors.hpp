#pragma once

#include <stdexcept>
#include <string>

namespace kvh {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

#define KVH_ERROR(Name)                                                                            \
    struct Name : Error {                                                                          \
        explicit Name(const std::string& what) : Error(#Name ": " + what) {}                       \
    }

KVH_ERROR(InvalidGrid);
KVH_ERROR(ShapeMismatch);
KVH_ERROR(NonHermitian);
KVH_ERROR(NonNormalized);
KVH_ERROR(EmptyMask);
KVH_ERROR(DegenerateDensity);
KVH_ERROR(UnsupportedPhi);
KVH_ERROR(UnsupportedFunctional);
KVH_ERROR(WrongQuantumDimension);
KVH_ERROR(NonUnitary);
KVH_ERROR(NonFiniteState);
KVH_ERROR(InsufficientLadder);
KVH_ERROR(SnapshotError);

#undef KVH_ERROR

} // namespace kvh
