#pragma once

// Frozen expected values for the seed-0 forward-pass check, computed once
// by the straight-line scalar oracle in test_encoder.cpp and pinned here.
#define ABSA_ENCODER_GOLDEN_L0 (-0.11743073631438283)
#define ABSA_ENCODER_GOLDEN_L1 (0.030925596472141041)
#define ABSA_ENCODER_GOLDEN_L2 (-0.24375958311250254)

// Max step size for the overfit fixture (backtracking caps actual steps).
#define ABSA_ENCODER_OVERFIT_LR (0.5)
