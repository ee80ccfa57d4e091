#include <math.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include "dicke.h"

#define CHECK(cond)                                                   \
    do {                                                              \
        if (!(cond)) {                                                \
            char msg[256];                                            \
            dicke_last_error(msg, sizeof msg);                        \
            fprintf(stderr, "%s:%d: %s (%s)\n", __FILE__, __LINE__,   \
                    #cond, msg);                                      \
            return 1;                                                 \
        }                                                             \
    } while (0)

int main(void) {
    DickeModel *model = NULL;
    double v = 0.0;

    CHECK(dicke_model_new(1.0, 1.0, 1.0, 10.0, &model) == DICKE_STATUS_OK);
    CHECK(dicke_critical_coupling(model, &v) == DICKE_STATUS_OK && v == 0.5);
    CHECK(dicke_classical_ground_energy(model, &v) == DICKE_STATUS_OK);
    CHECK(fabs(v / 10.0 + 2.125) < 1e-6);
    CHECK(dicke_theta3(0.0, 0.5, &v) == DICKE_STATUS_OK);
    CHECK(fabs(v - 2.128936827211877) < 1e-12);

    double lambda = -1.0;
    CHECK(dicke_lyapunov(model, -1.1, 2.5, -0.2, 300.0, &lambda) == DICKE_STATUS_OK);
    CHECK(lambda > 0.004);
    CHECK(dicke_lyapunov(model, -3.0, 2.5, -0.2, 300.0, &lambda) == DICKE_STATUS_OFF_SHELL);

    DickeEigen *eigen = NULL;
    CHECK(dicke_eigen_compute(model, 90, 1, -2.2, -0.4, &eigen) == DICKE_STATUS_OK);
    size_t dim = 0, nvec = 0, need = 0;
    CHECK(dicke_eigen_size(eigen, &dim, &nvec) == DICKE_STATUS_OK && nvec > 0 && nvec < dim);
    CHECK(dicke_eigen_energies(eigen, NULL, 0, &need) == DICKE_STATUS_BUFFER_TOO_SMALL && need == dim);
    double *energies = malloc(dim * sizeof *energies);
    CHECK(dicke_eigen_energies(eigen, energies, dim, &need) == DICKE_STATUS_OK);
    for (size_t k = 1; k < dim; k++) {
        CHECK(energies[k] >= energies[k - 1]);
    }
    free(energies);

    double times[3] = {0.0, 0.5, 1.0};
    double sp[3], pr = 0.0;
    CHECK(dicke_survival_probability(eigen, -1.8, 3.14, -0.3, times, 3, sp, &pr) == DICKE_STATUS_OK);
    CHECK(fabs(sp[0] - 1.0) < 1e-10 && sp[1] < 1.0 && pr > 1.0);
    times[2] = 0.2;
    CHECK(dicke_survival_probability(eigen, -1.8, 3.14, -0.3, times, 3, sp, &pr) == DICKE_STATUS_INVALID_ARGUMENT);
    dicke_eigen_free(eigen);
    dicke_model_free(model);

    CHECK(dicke_model_new(1.0, 1.0, 1.0, 2.25, &model) == DICKE_STATUS_INVALID_ARGUMENT);
    char msg[8];
    size_t len = dicke_last_error(msg, sizeof msg);
    CHECK(len > sizeof msg && strlen(msg) == sizeof msg - 1);
    CHECK(dicke_critical_coupling(NULL, &v) == DICKE_STATUS_NULL_POINTER);
    printf("c smoke ok (version %s)\n", dicke_version());
    return 0;
}
