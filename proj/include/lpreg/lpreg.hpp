#pragma once

#include <lpreg/analysis.hpp>
#include <lpreg/error.hpp>
#include <lpreg/experiments.hpp>
#include <lpreg/io.hpp>
#include <lpreg/optimality.hpp>
#include <lpreg/problem.hpp>
#include <lpreg/prox.hpp>
#include <lpreg/prox_oracle.hpp>
#include <lpreg/solvers.hpp>
#include <lpreg/types.hpp>
