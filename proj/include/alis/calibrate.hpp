#pragma once

#include <span>

#include "alis/eval.hpp"
#include "alis/model_io.hpp"
#include "alis/pipeline.hpp"

namespace alis {

/// Post-training int8 conversion. Runs float forwards over the calibration
/// inputs (already preprocessed network tensors), records min/max at the
/// input and output of every convolution, and emits per-channel symmetric
/// int8 conv weights, int32 biases and per-tensor activation parameters.
/// The point MLP keeps float arithmetic; its weights are stored as int8 with
/// per-row scales. Throws DomainError on an empty calibration set or a model
/// that is already quantized.
ModelBundle quantize_model(const ModelBundle& m, std::span<const Tensor> inputs);

// Calibrates on the manifest images (masks are not read). Unreadable images
// are skipped; DomainError when none is readable.
ModelBundle quantize_model(const ModelBundle& m, const Manifest& calib,
                           const PreprocessOptions& opts = {});

}  // namespace alis
