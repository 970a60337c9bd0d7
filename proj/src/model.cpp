#include "alis/model.hpp"

namespace alis {

Model::Model(const ModelBundle& bundle)
    : backbone_((bundle.validate(), build_backbone(bundle.backbone, bundle.tensors))),
      head_(build_head(bundle.head, bundle.backbone, bundle.tensors)),
      norm_(bundle.normalization),
      quantized_(bundle.quantized) {}

Model::Trace Model::trace(const Tensor& input, ActivationRecorder* rec) const {
    Trace t;
    t.levels = backbone_.forward(input, rec);
    t.coarse_features = head_.aggregate(t.levels, rec);
    t.coarse = head_.coarse_segment(t.coarse_features, rec);
    t.refined = pointrend_infer(t.coarse, head_.fine_features(t.levels), head_.config().pointrend,
                                head_.point_head());
    return t;
}

LogitMap Model::forward(const Tensor& input, ActivationRecorder* rec) const {
    return trace(input, rec).refined;
}

}  // namespace alis
