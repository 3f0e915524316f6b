#pragma once

#include <stdexcept>
#include <string>

namespace samu {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define SAMU_DECLARE_ERROR(Name)              \
    class Name : public Error {               \
    public:                                   \
        using Error::Error;                   \
    }

SAMU_DECLARE_ERROR(InvalidArgument);
SAMU_DECLARE_ERROR(DimensionMismatch);

// file I/O
SAMU_DECLARE_ERROR(MissingFile);
SAMU_DECLARE_ERROR(UnsupportedFormat);
SAMU_DECLARE_ERROR(CorruptHeader);
SAMU_DECLARE_ERROR(BadMagic);
SAMU_DECLARE_ERROR(IoFailure);

// prompts / selection
SAMU_DECLARE_ERROR(EmptyMask);
SAMU_DECLARE_ERROR(EmptyCandidateList);

// external backend
SAMU_DECLARE_ERROR(BackendUnavailable);
SAMU_DECLARE_ERROR(ProtocolViolation);

/// The backend answered `ERR <message>`; what() is the message verbatim.
SAMU_DECLARE_ERROR(BackendError);

// harness
SAMU_DECLARE_ERROR(EmptyDataset);

#undef SAMU_DECLARE_ERROR

} // namespace samu
