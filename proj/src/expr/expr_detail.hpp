#pragma once

#include "evolab/expr.hpp"

#include <span>
#include <string>

namespace evolab::detail {

std::string print_node(const ExprNode& n);

double apply_unary(UnaryOp op, double a, const ExprNode& node);
double apply_binary(BinaryOp op, double a, double b, const ExprNode& node);
double radius_of(std::span<const double> x);

}  // namespace evolab::detail
