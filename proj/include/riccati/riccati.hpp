#pragma once

#include "commands.hpp"
#include "config.hpp"
#include "core.hpp"
#include "dre_solver.hpp"
#include "errors.hpp"
#include "matrix_ops.hpp"
#include "reference.hpp"
#include "semigroup.hpp"
#include "solution_types.hpp"
#include "symplectic.hpp"
#include "system.hpp"
#include "textio.hpp"
#include "transforms.hpp"
#include "validate.hpp"
