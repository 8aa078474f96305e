#pragma once

#include <stdexcept>
#include <string>

namespace cavitylab {

// Stable error codes; the CLI maps these onto ERR_PARSE / ERR_PARAM / ERR_NUMERIC.
enum class ErrCode {
    InvalidParameter,
    ParseError,
    TooLarge,
    DegenerateMeasure,
    DegenerateUpdate,
    NotATree,
    ReducibleMatrix,
    GenerationFailure,
    InvalidPolytopePoint,
    InvalidDirection,
    InternalError,
};

class CavityError : public std::runtime_error {
public:
    CavityError(ErrCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}
    ErrCode code() const { return code_; }

private:
    ErrCode code_;
};

inline const char* err_prefix(ErrCode c) {
    switch (c) {
        case ErrCode::ParseError: return "ERR_PARSE";
        case ErrCode::InvalidParameter: return "ERR_PARAM";
        default: return "ERR_NUMERIC";
    }
}

}  // namespace cavitylab
