import math

import numpy as np
import pytest

from dominio_plano import make_annulus, sample_grid
from erros import LabyrinthFitError, PreconditionError, ResolutionError, VerificationFailure
from labirinto import (DeformParams, N_minimo, amostras_bandas, build_labyrinth, compute_mu, default_M,
                       escolher_subanel, labyrinth_metric, lopez_ros_deform, verify_metric_bound)
from nucleo_weierstrass import LaurentPoly

DZ = LaurentPoly.constante(1.0)


def _grade_verificacao(C, N, angular=64):
    radial = int(math.ceil(4 * C.largura / (1.0 / (2 * N ** 3)))) + 1
    return sample_grid(C, radial, angular, N=N)


class TestConstrucao:
    def test_bandas_e_raios(self, anel_labirinto):
        spec = build_labyrinth(anel_labirinto, 3)
        assert len(spec.bands) == 18
        primeira = spec.bands[0]
        assert primeira.raio_max == pytest.approx(1.0 - 1 / 108)
        assert primeira.raio_min == pytest.approx(1.0 - 1 / 27 + 1 / 108)
        assert spec.abertura == pytest.approx(1 / 9)

    def test_anel_fino_demais(self, anel_labirinto):
        with pytest.raises(LabyrinthFitError):
            build_labyrinth(anel_labirinto, 2)

    def test_N_minimo(self, anel_labirinto):
        assert N_minimo(anel_labirinto) == 3
        assert N_minimo(make_annulus(1.0, 2.0)) == 3

    def test_fendas_alternadas(self, anel_labirinto):
        spec = build_labyrinth(anel_labirinto, 3)
        rho1 = 0.5 * (spec.bands[0].raio_min + spec.bands[0].raio_max)
        rho2 = 0.5 * (spec.bands[1].raio_min + spec.bands[1].raio_max)
        # banda ímpar tem a fenda em arg z = π, banda par em arg z = 0
        assert spec.banda_de(rho1) == 1
        assert spec.banda_de(-rho1) == 0
        assert spec.banda_de(rho2) == 0
        assert spec.banda_de(-rho2) == 2

    def test_fora_das_bandas(self, anel_labirinto):
        spec = build_labyrinth(anel_labirinto, 3)
        # centro do intervalo entre as bandas 1 e 2
        assert spec.banda_de(spec.s(1) * 1j) == 0
        assert spec.banda_de(0.3j) == 0

    def test_amostras_dentro_das_bandas(self, anel_labirinto):
        spec = build_labyrinth(anel_labirinto, 3)
        pontos, bandas, _ = amostras_bandas(spec)
        assert np.array_equal(spec.banda_de(pontos), bandas)


class TestConstantes:
    def test_mu_de_dz(self, anel_labirinto):
        grade = sample_grid(anel_labirinto, 8, 16)
        assert compute_mu(DZ, anel_labirinto, grade) == pytest.approx(0.9)

    def test_mu_com_zero_de_phi3(self):
        C = make_annulus(0.5, 1.5)
        grade = sample_grid(C, 11, 16)
        with pytest.raises(PreconditionError):
            compute_mu(LaurentPoly.monomio(1, 1.0) - LaurentPoly.constante(1.0), C, grade)

    def test_M_padrao(self):
        assert default_M(3) == 324.0
        assert DeformParams(mu=0.9, M=default_M(3)).acima_do_limiar(3)
        assert not DeformParams(mu=0.9, M=2 * 3 ** 4).acima_do_limiar(3)

    def test_subanel(self):
        C = escolher_subanel(make_annulus(1.0, 2.0), DZ)
        assert C.inner_radius == pytest.approx(1.1)
        assert C.outer_radius == pytest.approx(1.9)

    def test_subanel_evita_zero(self):
        # φ3 = z - 1.1 se anula sobre o primeiro subanel candidato
        phi3 = LaurentPoly.monomio(1) - LaurentPoly.constante(1.1)
        C = escolher_subanel(make_annulus(1.0, 2.0), phi3)
        assert C.inner_radius > 1.1


class TestCotaDaMetrica:
    @pytest.mark.parametrize("N", [3, 4])
    def test_cota_com_M_padrao(self, anel_labirinto, N):
        spec = build_labyrinth(anel_labirinto, N)
        grade = _grade_verificacao(anel_labirinto, N)
        mu = compute_mu(DZ, anel_labirinto, grade)
        params = DeformParams(mu=mu, M=default_M(N))
        deformada = lopez_ros_deform(DZ, params.M, anel_labirinto)
        relatorio = verify_metric_bound(deformada, spec, params, grade)
        assert relatorio.aprovado
        assert relatorio.razao_minima > 1.0
        assert relatorio.nos_verificados > 0

    def test_razao_intermediaria(self, anel_labirinto):
        spec = build_labyrinth(anel_labirinto, 3)
        grade = _grade_verificacao(anel_labirinto, 3)
        params = DeformParams(mu=0.9, M=324.0)
        relatorio = verify_metric_bound(lopez_ros_deform(DZ, 324.0, anel_labirinto), spec, params, grade)
        assert relatorio.razao_intermediaria == pytest.approx(0.25 * (1 / 324 + 324) ** 2 / 3 ** 8)
        assert relatorio.razao_intermediaria == pytest.approx(4.0001, abs=1e-4)

    def test_M_logo_acima_do_limiar(self, anel_labirinto):
        N = 3
        M = 2 * N ** 4 * (1 + 1e-6)
        spec = build_labyrinth(anel_labirinto, N)
        grade = _grade_verificacao(anel_labirinto, N)
        relatorio = verify_metric_bound(lopez_ros_deform(DZ, M, anel_labirinto), spec,
                                        DeformParams(mu=0.9, M=M), grade)
        assert 1.0 < relatorio.razao_intermediaria < 1.0001

    def test_M_pequeno_demais(self, anel_labirinto):
        N = 3
        M = float(N ** 4)
        spec = build_labyrinth(anel_labirinto, N)
        grade = _grade_verificacao(anel_labirinto, N)
        with pytest.raises(VerificationFailure) as erro:
            verify_metric_bound(lopez_ros_deform(DZ, M, anel_labirinto), spec, DeformParams(mu=0.9, M=M), grade)
        assert erro.value.margem < 0
        assert erro.value.no_pior is not None

    def test_bandas_mal_resolvidas(self, anel_labirinto):
        spec = build_labyrinth(anel_labirinto, 3)
        grade = sample_grid(anel_labirinto, 50, 64)
        with pytest.raises(ResolutionError):
            verify_metric_bound(lopez_ros_deform(DZ, 324.0, anel_labirinto), spec,
                                DeformParams(mu=0.9, M=324.0), grade)


class TestMetricaDoLabirinto:
    def test_fator_dentro_e_fora(self, anel_labirinto):
        spec = build_labyrinth(anel_labirinto, 3)
        grade = sample_grid(anel_labirinto, 163, 64, N=3)
        metrica = labyrinth_metric(spec, DZ, 324.0, grade)
        em_K = spec.contem(grade.nodes).reshape(grade.z.shape)
        assert np.allclose(metrica.lambda2[em_K], 1 + 0.5 * (324.0 ** 2 + 324.0 ** -2))
        assert np.allclose(metrica.lambda2[~em_K], 1.0)
