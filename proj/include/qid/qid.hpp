#pragma once

#include "qid/analysis.hpp"
#include "qid/charfn.hpp"
#include "qid/criteria.hpp"
#include "qid/dlog.hpp"
#include "qid/errors.hpp"
#include "qid/lk.hpp"
#include "qid/numeric.hpp"
#include "qid/recover.hpp"
#include "qid/spectral.hpp"
