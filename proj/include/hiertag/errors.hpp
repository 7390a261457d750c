#pragma once

#include <stdexcept>
#include <string>

namespace hiertag {

// Base class for every error raised by the library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

#define HIERTAG_ERROR_TYPE(name) \
  struct name : Error {          \
    using Error::Error;          \
  }

// hierarchy parsing / validation
HIERTAG_ERROR_TYPE(MalformedDocument);
HIERTAG_ERROR_TYPE(DuplicateFineTag);
HIERTAG_ERROR_TYPE(DuplicateName);
HIERTAG_ERROR_TYPE(EmptyGroup);

// tensor / graph ops
HIERTAG_ERROR_TYPE(ShapeMismatch);
HIERTAG_ERROR_TYPE(LengthMismatch);
HIERTAG_ERROR_TYPE(NonScalarRoot);

// heads / checkpoints
HIERTAG_ERROR_TYPE(VariantMismatch);
HIERTAG_ERROR_TYPE(HierarchyMismatch);

// metrics
HIERTAG_ERROR_TYPE(DegenerateLabels);
HIERTAG_ERROR_TYPE(NoObservedEntries);

// dataset io
HIERTAG_ERROR_TYPE(MissingFile);
HIERTAG_ERROR_TYPE(HeaderMismatch);
HIERTAG_ERROR_TYPE(BadValue);
HIERTAG_ERROR_TYPE(RaggedRows);
HIERTAG_ERROR_TYPE(IdMismatch);

// training
HIERTAG_ERROR_TYPE(EmptyDataset);

// generic io
HIERTAG_ERROR_TYPE(IoError);

#undef HIERTAG_ERROR_TYPE

}  // namespace hiertag
