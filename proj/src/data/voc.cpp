#include "mgd/data/voc.hpp"

#include "mgd/data/partition.hpp"

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace mgd::data {

namespace fs = std::filesystem;

VocStyleDataset::VocStyleDataset(fs::path root, const fs::path& list_file) : root_(std::move(root))
{
    std::ifstream in(list_file);
    if (!in) throw std::runtime_error("cannot read list file " + list_file.string());
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string first, second;
        if (!(ls >> first)) continue;
        Entry e;
        if (ls >> second) {
            e.image = root_ / first;
            e.mask = root_ / second;
            e.id = fs::path(first).stem().string();
        } else {
            e.id = first;
            e.image = root_ / "images" / (first + ".png");
            if (!fs::exists(e.image)) e.image = root_ / "images" / (first + ".jpg");
            e.mask = root_ / "masks" / (first + ".png");
        }
        if (!fs::exists(e.image)) throw std::runtime_error("missing image file: " + e.image.string());
        if (!fs::exists(e.mask)) throw std::runtime_error("missing mask file: " + e.mask.string());
        entries_.push_back(std::move(e));
    }
}

Sample VocStyleDataset::get(std::size_t index) const
{
    const auto& e = entries_.at(index);
    cv::Mat bgr = cv::imread(e.image.string(), cv::IMREAD_COLOR);
    if (bgr.empty()) throw std::runtime_error("cannot decode image " + e.image.string());
    cv::Mat mask = cv::imread(e.mask.string(), cv::IMREAD_UNCHANGED);
    if (mask.empty()) throw std::runtime_error("cannot decode mask " + e.mask.string());
    if (mask.channels() != 1 || mask.depth() != CV_8U) {
        throw std::runtime_error("mask " + e.mask.string() + " must be a single-channel 8-bit class-id image");
    }
    if (mask.rows != bgr.rows || mask.cols != bgr.cols) {
        throw std::runtime_error("mask " + e.mask.string() + " is " + std::to_string(mask.cols) + "x" +
                                 std::to_string(mask.rows) + " but image " + e.image.string() + " is " +
                                 std::to_string(bgr.cols) + "x" + std::to_string(bgr.rows));
    }
    cv::Mat rgb;
    cv::cvtColor(bgr, rgb, cv::COLOR_BGR2RGB);
    if (!rgb.isContinuous()) rgb = rgb.clone();
    if (!mask.isContinuous()) mask = mask.clone();
    const auto h = static_cast<std::size_t>(rgb.rows), w = static_cast<std::size_t>(rgb.cols);
    Sample s;
    s.id = e.id;
    s.image = normalize_rgb(rgb.ptr<std::uint8_t>(), h, w);
    s.mask = Tensor<std::uint8_t>({h, w}, std::vector<std::uint8_t>(mask.ptr<std::uint8_t>(), mask.ptr<std::uint8_t>() + h * w));
    return s;
}

void export_voc_style(const Dataset& dataset, const fs::path& root, const std::string& split_name)
{
    fs::create_directories(root / "images");
    fs::create_directories(root / "masks");
    fs::create_directories(root / "splits");
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        const Sample s = dataset.get(i);
        const int h = static_cast<int>(s.mask.dim(0)), w = static_cast<int>(s.mask.dim(1));
        auto bytes = denormalize_rgb(s.image);
        cv::Mat rgb(h, w, CV_8UC3, bytes.data());
        cv::Mat bgr;
        cv::cvtColor(rgb, bgr, cv::COLOR_RGB2BGR);
        const auto image_path = root / "images" / (s.id + ".png");
        if (!cv::imwrite(image_path.string(), bgr)) throw std::runtime_error("cannot write " + image_path.string());
        cv::Mat mask(h, w, CV_8UC1, const_cast<std::uint8_t*>(s.mask.raw()));
        const auto mask_path = root / "masks" / (s.id + ".png");
        if (!cv::imwrite(mask_path.string(), mask)) throw std::runtime_error("cannot write " + mask_path.string());
        ids.push_back(s.id);
    }
    write_id_list((root / "splits" / (split_name + ".txt")).string(), ids);
}

} // namespace mgd::data
