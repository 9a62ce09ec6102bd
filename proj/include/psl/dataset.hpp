#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "psl/error.hpp"

namespace psl {

enum class ColumnKind { binary, numeric };

inline const char* to_string(ColumnKind k) { return k == ColumnKind::binary ? "binary" : "numeric"; }

struct Column {
    std::string name;
    ColumnKind kind = ColumnKind::numeric;
};

/// Feature matrix (row-major, N x d) with binary labels and a record of
/// which cells were imputed. Labels may be absent for prediction-only data.
class Dataset {
public:
    Dataset() = default;

    Dataset(std::vector<Column> columns, std::vector<double> values, std::vector<int> labels,
            std::vector<std::uint8_t> imputed = {})
        : columns_(std::move(columns)), values_(std::move(values)), labels_(std::move(labels)),
          imputed_(std::move(imputed)) {
        const std::size_t d = columns_.size();
        if (d == 0 && !values_.empty()) throw InvalidArgument("values given without columns");
        rows_ = d == 0 ? labels_.size() : values_.size() / d;
        if (d != 0 && values_.size() % d != 0) throw InvalidArgument("value matrix is not rectangular");
        if (!labels_.empty() && labels_.size() != rows_) throw InvalidArgument("label count differs from row count");
        if (imputed_.empty()) imputed_.assign(values_.size(), 0);
        if (imputed_.size() != values_.size()) throw InvalidArgument("imputation mask has the wrong size");
        for (int y : labels_)
            if (y != 0 && y != 1) throw DataError("labels must be 0 or 1");
        for (std::size_t j = 0; j < d; ++j) {
            if (columns_[j].kind != ColumnKind::binary) continue;
            for (std::size_t i = 0; i < rows_; ++i) {
                double v = at(i, j);
                if (v != 0.0 && v != 1.0)
                    throw DataError("binary column '" + columns_[j].name + "' holds value " + std::to_string(v));
            }
        }
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return columns_.size(); }
    const std::vector<Column>& columns() const noexcept { return columns_; }
    const Column& column(std::size_t j) const { return columns_.at(j); }
    bool has_labels() const noexcept { return !labels_.empty() || rows_ == 0; }
    const std::vector<int>& labels() const noexcept { return labels_; }
    int label(std::size_t i) const { return labels_.at(i); }

    double at(std::size_t i, std::size_t j) const { return values_[i * columns_.size() + j]; }
    bool imputed(std::size_t i, std::size_t j) const { return imputed_[i * columns_.size() + j] != 0; }
    std::span<const double> row(std::size_t i) const {
        return std::span<const double>(values_).subspan(i * columns_.size(), columns_.size());
    }
    const std::vector<double>& values() const noexcept { return values_; }
    const std::vector<std::uint8_t>& imputed_mask() const noexcept { return imputed_; }

    std::vector<double> column_values(std::size_t j) const {
        std::vector<double> out(rows_);
        for (std::size_t i = 0; i < rows_; ++i) out[i] = at(i, j);
        return out;
    }

    std::size_t index_of(std::string_view name) const {
        for (std::size_t j = 0; j < columns_.size(); ++j)
            if (columns_[j].name == name) return j;
        throw NotFound("unknown column '" + std::string(name) + "'");
    }

    std::size_t positives() const {
        std::size_t p = 0;
        for (int y : labels_) p += static_cast<std::size_t>(y);
        return p;
    }

    /// Rows selected by index, in the given order.
    Dataset subset(std::span<const std::size_t> rows) const {
        const std::size_t d = columns_.size();
        std::vector<double> v;
        std::vector<int> y;
        std::vector<std::uint8_t> m;
        v.reserve(rows.size() * d);
        m.reserve(rows.size() * d);
        for (std::size_t i : rows) {
            if (i >= rows_) throw InvalidArgument("row index out of range");
            for (std::size_t j = 0; j < d; ++j) {
                v.push_back(at(i, j));
                m.push_back(imputed_[i * d + j]);
            }
            if (!labels_.empty()) y.push_back(labels_[i]);
        }
        Dataset out;
        out.columns_ = columns_;
        out.values_ = std::move(v);
        out.labels_ = std::move(y);
        out.imputed_ = std::move(m);
        out.rows_ = rows.size();
        return out;
    }

private:
    std::vector<Column> columns_;
    std::vector<double> values_;
    std::vector<int> labels_;
    std::vector<std::uint8_t> imputed_;
    std::size_t rows_ = 0;
};

}  // namespace psl
