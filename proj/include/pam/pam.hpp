#pragma once

#include "pam/csr.hpp"
#include "pam/errors.hpp"
#include "pam/graph.hpp"
#include "pam/graph_io.hpp"
#include "pam/graphclass.hpp"
#include "pam/matrix_market.hpp"
#include "pam/pam_matrix.hpp"
#include "pam/parallel.hpp"
#include "pam/primes.hpp"
#include "pam/relpred.hpp"
#include "pam/rng.hpp"
#include "pam/svm.hpp"
