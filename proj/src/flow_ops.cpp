#include "dfp/flow_ops.hpp"

namespace dfp {

template <typename T>
std::pair<Tensor<T>, Tensor<T>> flow_warp(const Tensor<T>& x, const Tensor<T>& flow) {
    const Shape& xs = x.shape();
    const Shape& fs = flow.shape();
    DFP_CHECK(xs.size() == 4 && fs.size() == 4 && fs[1] == 2, "flow_warp: need x NCHW and flow [N,2,H,W], got ",
              shape_str(xs), " and ", shape_str(fs));
    DFP_CHECK(xs[0] == fs[0] && xs[2] == fs[2] && xs[3] == fs[3],
              "flow_warp: spatial/batch mismatch ", shape_str(xs), " vs ", shape_str(fs));
    Tensor<T> grid = make_pixel_grid<T>(fs[0], fs[2], fs[3]);
    Tensor<T> coords = add(grid, flow);
    return bilinear_sample(x, coords);
}

template <typename T>
Tensor<T> upsample_flow2x(const Tensor<T>& flow) {
    DFP_CHECK(flow.shape().size() == 4 && flow.shape()[1] == 2,
              "upsample_flow2x: expected [N,2,H,W], got ", shape_str(flow.shape()));
    return scale(upsample_bilinear2x(flow), T(2));
}

#define DFP_INSTANTIATE(T)                                                               \
    template std::pair<Tensor<T>, Tensor<T>> flow_warp(const Tensor<T>&, const Tensor<T>&); \
    template Tensor<T> upsample_flow2x(const Tensor<T>&);

DFP_INSTANTIATE(float)
DFP_INSTANTIATE(double)
#undef DFP_INSTANTIATE

}  // namespace dfp
