#pragma once

#include <qmm/errors.hpp>
#include <qmm/space.hpp>
#include <qmm/generators.hpp>
#include <qmm/regularization.hpp>
#include <qmm/geometry.hpp>
#include <qmm/barrier.hpp>
#include <qmm/gradients.hpp>
#include <qmm/bumps.hpp>
#include <qmm/embeddings.hpp>
#include <qmm/recovery.hpp>
#include <qmm/io.hpp>
