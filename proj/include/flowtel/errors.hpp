#ifndef FLOWTEL_ERRORS_HPP
#define FLOWTEL_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace flowtel {

enum class ErrorCode : int {
   Ok = 0,
   NullPointer = -1,
   BadParameter = -2,
   NoInverse = -3,
   IdOutOfRange = -4,
   IncompatibleSketches = -5,
   FoldIndivisible = -6,
   Io = -7,
   BadFormat = -8,
   Internal = -9,
};

class Error : public std::runtime_error {
public:
   Error(ErrorCode code, const std::string& msg) : std::runtime_error(msg), code_(code) {}
   ErrorCode code() const { return code_; }

private:
   ErrorCode code_;
};

inline Error no_inverse(const std::string& msg) { return Error(ErrorCode::NoInverse, msg); }
inline Error bad_parameter(const std::string& msg) { return Error(ErrorCode::BadParameter, msg); }
inline Error id_out_of_range(const std::string& msg) { return Error(ErrorCode::IdOutOfRange, msg); }
inline Error incompatible_sketches(const std::string& msg) { return Error(ErrorCode::IncompatibleSketches, msg); }
inline Error fold_indivisible(const std::string& msg) { return Error(ErrorCode::FoldIndivisible, msg); }
inline Error io_error(const std::string& msg) { return Error(ErrorCode::Io, msg); }
inline Error bad_format(const std::string& msg) { return Error(ErrorCode::BadFormat, msg); }

}  // namespace flowtel

#endif
