#pragma once

// Conversions between herbage rasters and OpenCV matrices. Private to the
// library; OpenCV is not part of the public interface.

#include <opencv2/core.hpp>

#include "herbage/raster.hpp"

namespace herbage::detail {

inline cv::Mat view(Raster<std::uint8_t>& r) {
  return cv::Mat(r.height, r.width, CV_8UC(r.channels), r.data.data());
}

inline cv::Mat view(const Raster<std::uint8_t>& r) {
  return cv::Mat(r.height, r.width, CV_8UC(r.channels), const_cast<std::uint8_t*>(r.data.data()));
}

inline Raster<std::uint8_t> to_raster(const cv::Mat& m) {
  CV_Assert(m.depth() == CV_8U);
  Raster<std::uint8_t> r(m.cols, m.rows, m.channels());
  cv::Mat dst = view(r);
  m.copyTo(dst);
  return r;
}

}  // namespace herbage::detail
