#pragma once

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace qmeta {

/// Base class for every error raised by the library. `kind()` is the
/// machine-readable tag used by the CLI error JSON.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& what)
        : std::runtime_error(what), kind_(std::move(kind)) {}
    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

#define QMETA_DEFINE_ERROR(Name)                                              \
    class Name : public Error {                                               \
    public:                                                                   \
        explicit Name(const std::string& what) : Error(#Name, what) {}        \
    }

QMETA_DEFINE_ERROR(InvalidArgument);
QMETA_DEFINE_ERROR(DimensionMismatch);
QMETA_DEFINE_ERROR(NonConvergence);
QMETA_DEFINE_ERROR(SingularPencil);
QMETA_DEFINE_ERROR(NoGap);
QMETA_DEFINE_ERROR(AllRatesZero);
QMETA_DEFINE_ERROR(RootNotBracketed);
QMETA_DEFINE_ERROR(EmptyEnsemble);
QMETA_DEFINE_ERROR(ComplexSpectrum);
QMETA_DEFINE_ERROR(InsufficientData);
QMETA_DEFINE_ERROR(TooFewTransitions);
QMETA_DEFINE_ERROR(UnknownPreset);
QMETA_DEFINE_ERROR(MissingParam);
QMETA_DEFINE_ERROR(SchemaError);

#undef QMETA_DEFINE_ERROR

/// Raised when a matrix has a Jordan block (or is numerically too close to
/// one). The eigenvalues are still reported.
class DefectiveMatrix : public Error {
public:
    DefectiveMatrix(const std::string& what,
                    std::vector<std::complex<double>> eigenvalues)
        : Error("DefectiveMatrix", what), eigenvalues_(std::move(eigenvalues)) {}
    const std::vector<std::complex<double>>& eigenvalues() const noexcept {
        return eigenvalues_;
    }

private:
    std::vector<std::complex<double>> eigenvalues_;
};

class NotResetProcess : public Error {
public:
    NotResetProcess(std::size_t jump, const std::string& what)
        : Error("NotResetProcess", what), jump_(jump) {}
    std::size_t jump_index() const noexcept { return jump_; }

private:
    std::size_t jump_;
};

}  // namespace qmeta
