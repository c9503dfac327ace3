import math

import numpy as np
import pytest

from dominio_plano import make_annulus, sample_grid
from erros import BranchPointError, ConnectivityError
from labirinto import build_labyrinth, default_M, labyrinth_metric
from metricas_completude import (caminho_mais_curto, crossing_length, distance_field, distance_to_boundary,
                                 intrinsic_distance, metric_graph)
from nucleo_weierstrass import LaurentPoly, MetricField, induced_metric, plane_triple

DZ = LaurentPoly.constante(1.0)


def _travessia_catenoide(catenoide, anel, radial):
    grade = sample_grid(anel, radial, 64)
    grafo = metric_graph(grade, induced_metric(catenoide, grade))
    distancia, _ = caminho_mais_curto(grafo, grade.fronteira_interna(), grade.fronteira_externa())
    return distancia


class TestDistancia:
    def test_travessia_do_catenoide(self, catenoide, anel_padrao):
        # λ = (1 + |z|⁻²)/√2 só depende do raio: a distância entre os círculos é a integral radial
        exata = ((2.0 - 0.5) + (1 / 0.5 - 1 / 2.0)) / math.sqrt(2)
        erros = [abs(_travessia_catenoide(catenoide, anel_padrao, n) - exata) for n in (32, 64, 128)]
        assert erros[2] < 0.05 * exata
        assert erros[0] > erros[1] > erros[2]

    def test_distancia_a_fronteira_no_plano(self, disco_unitario):
        grade = sample_grid(disco_unitario, 33, 32)
        grafo = metric_graph(grade, induced_metric(plane_triple(disco_unitario), grade))
        assert distance_to_boundary(grafo, 0) == pytest.approx(math.sqrt(2), rel=1e-12)

    def test_homogeneidade(self, catenoide, anel_padrao):
        grade = sample_grid(anel_padrao, 16, 32)
        metrica = induced_metric(catenoide, grade)
        dobrada = MetricField(grid=grade, lambda2=4 * metrica.lambda2)
        alvos = grade.fronteira_externa()
        d1 = intrinsic_distance(metric_graph(grade, metrica), 0, alvos)
        d2 = intrinsic_distance(metric_graph(grade, dobrada), 0, alvos)
        assert d2 == pytest.approx(2 * d1, rel=1e-12)

    def test_campo_de_distancias(self, disco_unitario):
        grade = sample_grid(disco_unitario, 9, 16)
        grafo = metric_graph(grade, MetricField(grid=grade, lambda2=np.ones(grade.z.shape)))
        campo = distance_field(grafo, 0)
        assert campo[0] == 0
        assert campo[grade.indice(8, 0)] == pytest.approx(1.0)

    def test_centro_do_disco_e_um_so_no(self, disco_unitario):
        grade = sample_grid(disco_unitario, 9, 16)
        grafo = metric_graph(grade, MetricField(grid=grade, lambda2=np.ones(grade.z.shape)))
        campo = distance_field(grafo, grade.indice(0, 5))
        assert np.all(campo[:16] == 0)
        assert intrinsic_distance(grafo, grade.indice(0, 5), grade.fronteira_externa()) == pytest.approx(1.0)

    def test_simetria_e_desigualdade_triangular(self, catenoide, anel_padrao):
        grade = sample_grid(anel_padrao, 16, 32)
        grafo = metric_graph(grade, induced_metric(catenoide, grade))
        a, b, c = grade.indice(0, 0), grade.indice(15, 11), grade.indice(7, 24)
        de_a, de_b, de_c = (distance_field(grafo, no) for no in (a, b, c))
        assert de_a[b] == pytest.approx(de_b[a], rel=1e-12)
        assert de_a[c] == pytest.approx(de_c[a], rel=1e-12)
        assert de_a[c] <= de_a[b] + de_b[c] + 1e-12
        assert de_a[b] <= de_a[c] + de_c[b] + 1e-12

    def test_convergencia_no_cilindro_plano(self):
        # λ = 1/|z| faz do anel um cilindro plano de altura log 4
        anel = make_annulus(0.5, 2.0)
        erros = []
        for radial in (32, 64, 128):
            grade = sample_grid(anel, radial, 64)
            metrica = MetricField(grid=grade, lambda2=1 / np.abs(grade.z) ** 2)
            distancia, _ = caminho_mais_curto(metric_graph(grade, metrica), grade.fronteira_interna(),
                                              grade.fronteira_externa())
            erros.append(abs(distancia - math.log(4.0)))
        assert erros[0] > erros[1] > erros[2]
        assert erros[2] < 1e-3

    def test_metrica_degenerada(self, disco_unitario):
        grade = sample_grid(disco_unitario, 4, 8)
        lambda2 = np.ones(grade.z.shape)
        lambda2[2, 3] = 0.0
        with pytest.raises(BranchPointError) as erro:
            metric_graph(grade, MetricField(grid=grade, lambda2=lambda2))
        assert erro.value.no == grade.indice(2, 3)


class TestTravessiaDoLabirinto:
    GRADES = {3: (200, 128), 4: (260, 128), 5: (380, 256)}

    def _travessia(self, C, N):
        spec = build_labyrinth(C, N)
        radial, angular = self.GRADES[N]
        grade = sample_grid(C, radial, angular)
        metrica = labyrinth_metric(spec, DZ, default_M(N), grade)
        return crossing_length(spec, metrica, grade, mu=0.9)

    def test_grade_de_outro_anel(self, anel_labirinto):
        spec = build_labyrinth(anel_labirinto, 3)
        grade = sample_grid(make_annulus(0.25, 1.5), 40, 32)
        metrica = MetricField(grid=grade, lambda2=np.ones(grade.z.shape))
        with pytest.raises(ConnectivityError):
            crossing_length(spec, metrica, grade, mu=0.9)

    def test_labirinto_alonga_a_travessia(self, anel_labirinto):
        grade = sample_grid(anel_labirinto, 200, 128)
        plana = MetricField(grid=grade, lambda2=np.ones(grade.z.shape))
        sem_labirinto, _ = caminho_mais_curto(metric_graph(grade, plana), grade.fronteira_interna(),
                                              grade.fronteira_externa())
        assert sem_labirinto == pytest.approx(0.75, rel=1e-9)
        resultados = [self._travessia(anel_labirinto, N) for N in (3, 4)]
        for resultado in resultados:
            assert resultado.distancia > sem_labirinto
            assert resultado.rho_estimado > 1.0
        assert resultados[0].distancia < resultados[1].distancia
        razoes = [r.rho_estimado for r in resultados]
        assert max(razoes) / min(razoes) < 3.0

    @pytest.mark.slow
    def test_estimativa_estavel_ate_N5(self, anel_labirinto):
        resultados = [self._travessia(anel_labirinto, N) for N in (3, 4, 5)]
        distancias = [r.distancia for r in resultados]
        assert distancias[0] < distancias[1] < distancias[2]
        razoes = [r.rho_estimado for r in resultados]
        assert min(razoes) > 1.0
        assert max(razoes) / min(razoes) < 3.0
