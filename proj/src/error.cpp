#include "perfquant/error.hpp"

namespace perfquant {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::io: return "io";
    case ErrorKind::format: return "format";
    case ErrorKind::schema: return "schema";
    case ErrorKind::precondition: return "precondition";
    case ErrorKind::numeric: return "numeric";
  }
  return "unknown";
}

}  // namespace perfquant
