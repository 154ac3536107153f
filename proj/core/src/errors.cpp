#include "cfseq/errors.hpp"

// Out-of-line anchor so the error hierarchy's typeinfo lives in the library.
namespace cfseq {
}  // namespace cfseq
