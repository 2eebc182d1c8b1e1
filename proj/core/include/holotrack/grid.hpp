#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace holotrack {

/// Dense row-major 2-D array. Element (x, y) lives at y * nx + x, so x is the
/// column (fast) index and y the row index.
template <class T>
class Grid {
public:
    Grid() = default;
    Grid(int nx, int ny, T fill = T{}) : nx_(nx), ny_(ny) {
        if (nx < 0 || ny < 0) {
            throw std::invalid_argument("Grid: negative dimension");
        }
        data_.assign(static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny), fill);
    }
    Grid(int nx, int ny, std::vector<T> values) : nx_(nx), ny_(ny), data_(std::move(values)) {
        if (nx < 0 || ny < 0 || data_.size() != static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny)) {
            throw std::invalid_argument("Grid: value count does not match " + std::to_string(nx) + "x" +
                                        std::to_string(ny));
        }
    }

    int nx() const noexcept { return nx_; }
    int ny() const noexcept { return ny_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    T& operator()(int x, int y) noexcept { return data_[index(x, y)]; }
    const T& operator()(int x, int y) const noexcept { return data_[index(x, y)]; }

    T& at(int x, int y) {
        check(x, y);
        return data_[index(x, y)];
    }
    const T& at(int x, int y) const {
        check(x, y);
        return data_[index(x, y)];
    }

    std::span<T> values() & noexcept { return data_; }
    std::span<const T> values() const& noexcept { return data_; }
    // A span into a temporary grid would dangle.
    std::span<T> values() && = delete;
    std::span<T> row(int y) noexcept { return std::span<T>(data_).subspan(index(0, y), nx_); }
    std::span<const T> row(int y) const noexcept { return std::span<const T>(data_).subspan(index(0, y), nx_); }

    T* data() noexcept { return data_.data(); }
    const T* data() const noexcept { return data_.data(); }

    bool same_shape(const Grid& other) const noexcept { return nx_ == other.nx_ && ny_ == other.ny_; }

    friend bool operator==(const Grid&, const Grid&) = default;

private:
    std::size_t index(int x, int y) const noexcept {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(nx_) + static_cast<std::size_t>(x);
    }
    void check(int x, int y) const {
        if (x < 0 || y < 0 || x >= nx_ || y >= ny_) {
            throw std::out_of_range("Grid index (" + std::to_string(x) + "," + std::to_string(y) + ") outside " +
                                    std::to_string(nx_) + "x" + std::to_string(ny_));
        }
    }

    int nx_ = 0;
    int ny_ = 0;
    std::vector<T> data_;
};

template <class To, class From>
Grid<To> grid_cast(const Grid<From>& in) {
    Grid<To> out(in.nx(), in.ny());
    auto src = in.values();
    auto dst = out.values();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = static_cast<To>(src[i]);
    return out;
}

}  // namespace holotrack
