import math

import numpy as np
import pytest

from dominio_plano import (cycle_from_polyline, discrete_laplacian, generator_cycle, make_annulus, make_disk,
                           sample_grid)
from erros import BranchPointError, RepresentationError, VerificationFailure, WellDefinednessError
from labirinto import lopez_ros_deform
from nucleo_weierstrass import (ExpLaurent, GaussPair, LaurentPoly, WeierstrassTriple, flux, from_gauss_pair,
                                gauss_map, induced_metric, integrate_along_path, integrate_immersion,
                                isotropy_residual, lorentz_residual, maximal_swap, phi3_minimo, plane_triple,
                                triple_from_laurent)


class TestLaurent:
    def test_soma_e_coeficientes(self):
        p = LaurentPoly.monomio(-1, 2.0) + LaurentPoly.monomio(2, 1j)
        assert p.k_min == -1 and p.k_max == 2
        assert p.coeficiente(0) == 0
        assert p.coeficiente(2) == 1j
        assert p.grau == 2

    def test_avaliacao_com_potencias_negativas(self):
        p = LaurentPoly(np.array([1.0, 0.0, 3.0], dtype=complex), -1)
        z = np.array([0.5, 2j])
        assert np.allclose(p.avaliar(z), 1 / z + 3 * z)

    def test_primitiva_separa_o_residuo(self):
        p = LaurentPoly(np.array([2.0, 1.0, 4.0], dtype=complex), -1)
        primitiva, residuo = p.primitiva()
        assert residuo == 2.0
        assert primitiva.coeficiente(0) == 0.0
        assert primitiva.coeficiente(1) == 1.0
        assert primitiva.coeficiente(2) == 2.0

    def test_ordem_na_origem(self):
        assert LaurentPoly(np.array([0, 0, 5], dtype=complex), 0).ordem_origem() == 2
        with pytest.raises(RepresentationError):
            LaurentPoly.zero().ordem_origem()


class TestCatenoide:
    def test_isotropia(self, catenoide, grade_64x256):
        assert isotropy_residual(catenoide, grade_64x256) < 1e-12

    def test_fluxo_vertical(self, catenoide, anel_padrao):
        fluxo = flux(catenoide, generator_cycle(anel_padrao))
        assert np.allclose(fluxo, [0.0, 0.0, 2 * math.pi], atol=1e-8)

    def test_altura_e_log_do_modulo(self, catenoide, anel_padrao):
        grade = sample_grid(anel_padrao, 32, 64)
        campo = integrate_immersion(catenoide, 1.0, grade, prescribed_h=np.log(np.abs(grade.z)))
        assert campo.erro_h < 1e-8

    def test_altura_errada(self, catenoide, anel_padrao):
        grade = sample_grid(anel_padrao, 16, 32)
        with pytest.raises(VerificationFailure):
            integrate_immersion(catenoide, 1.0, grade, prescribed_h=np.real(grade.z))

    def test_aplicacao_de_gauss(self, catenoide, grade_64x256):
        relatorio = gauss_map(catenoide, grade_64x256)
        assert np.allclose(relatorio.amostras, grade_64x256.nodes)
        assert relatorio.omite_zero_e_infinito

    def test_serializacao(self, catenoide, anel_padrao):
        copia = WeierstrassTriple.from_dict(catenoide.to_dict())
        fluxo = flux(copia, generator_cycle(anel_padrao))
        assert fluxo[2] == pytest.approx(2 * math.pi, abs=1e-8)

    def test_laplaciano_discreto(self, catenoide, anel_padrao):
        grade = sample_grid(anel_padrao, 128, 256)
        valores = integrate_immersion(catenoide, 1.0, grade).valores
        for coordenada in valores:
            assert np.nanmax(np.abs(discrete_laplacian(coordenada, grade))) < 2e-2


class TestEnneper:
    def test_zero_da_aplicacao_de_gauss(self, enneper, disco_unitario):
        grade = sample_grid(disco_unitario, 16, 32)
        assert isotropy_residual(enneper, grade) < 1e-12
        relatorio = gauss_map(enneper, grade)
        assert not relatorio.sem_zeros

    def test_imersao_parte_do_centro(self, enneper, disco_unitario):
        grade = sample_grid(disco_unitario, 16, 32)
        campo = integrate_immersion(enneper, 0j, grade)
        assert np.allclose(campo.valores[:, 0, :], 0.0)


class TestPlano:
    def test_metrica_constante(self, disco_unitario):
        grade = sample_grid(disco_unitario, 8, 16)
        metrica = induced_metric(plane_triple(disco_unitario), grade)
        assert np.allclose(metrica.lambda2, 2.0)

    def test_coordenadas(self, disco_unitario):
        grade = sample_grid(disco_unitario, 8, 16)
        campo = integrate_immersion(plane_triple(disco_unitario), 0j, grade)
        assert np.allclose(campo.valores[0], np.real(grade.z), atol=1e-12)
        assert np.allclose(campo.valores[1], -np.imag(grade.z), atol=1e-12)
        assert np.allclose(campo.valores[2], 0.0)

    def test_integral_em_poligonal(self, disco_unitario):
        total = integrate_along_path(plane_triple(disco_unitario), [0, 0.5, 0.5 + 0.5j])
        assert np.allclose(total, [0.5 + 0.5j, 1j * (0.5 + 0.5j), 0])


class TestErros:
    def test_periodo_real(self, anel_padrao):
        tripla = triple_from_laurent(anel_padrao, LaurentPoly.monomio(-1, 1j), LaurentPoly.monomio(-1),
                                     LaurentPoly.zero())
        grade = sample_grid(anel_padrao, 8, 16)
        with pytest.raises(WellDefinednessError) as erro:
            integrate_immersion(tripla, 1.0, grade)
        assert erro.value.componente == 1
        assert erro.value.periodo == pytest.approx(-2 * math.pi)

    def test_ponto_de_ramificacao(self, disco_unitario):
        tripla = triple_from_laurent(disco_unitario, LaurentPoly.monomio(1), LaurentPoly.monomio(1, 1j),
                                     LaurentPoly.zero())
        with pytest.raises(BranchPointError):
            induced_metric(tripla, sample_grid(disco_unitario, 8, 16))

    def test_zero_de_g_sem_zero_de_phi3(self, disco_unitario):
        par = GaussPair(u=LaurentPoly.zero(), eta3=LaurentPoly.constante(1.0), m=1)
        with pytest.raises(RepresentationError):
            from_gauss_pair(par, disco_unitario)

    def test_portador_fora_da_origem(self):
        par = GaussPair(u=LaurentPoly.zero(), eta3=LaurentPoly.constante(1.0))
        with pytest.raises(RepresentationError):
            from_gauss_pair(par, make_disk(1.0, center=0.5))


class TestFormaExponencial:
    def test_phi3_sem_zeros(self, disco_unitario):
        par = GaussPair(u=LaurentPoly.monomio(1, 0.3), eta3=ExpLaurent(LaurentPoly.monomio(1)), m=0)
        tripla = from_gauss_pair(par, disco_unitario)
        grade = sample_grid(disco_unitario, 16, 32)
        assert tripla.forma == "gauss"
        assert isotropy_residual(tripla, grade) < 1e-10
        assert phi3_minimo(tripla, grade) >= math.exp(-1) * (1 - 1e-12)


class TestDeformacao:
    @pytest.mark.parametrize("M", [2.0, 32.0, 324.0])
    def test_isotropia_preservada(self, disco_unitario, M):
        tripla = lopez_ros_deform(LaurentPoly.constante(1.0), M, disco_unitario)
        grade = sample_grid(disco_unitario, 8, 32)
        assert isotropy_residual(tripla, grade) < 1e-12
        metrica = induced_metric(tripla, grade)
        esperado = 1 + 0.5 * (M ** 2 + M ** -2)
        assert np.allclose(metrica.lambda2, esperado, rtol=1e-12)


class TestTrocaMaximal:
    @pytest.mark.parametrize("modo,indice_h", [("first", 0), ("second", 1)])
    def test_altura_preservada(self, catenoide, anel_padrao, modo, indice_h):
        grade = sample_grid(anel_padrao, 16, 64)
        psi, campo = maximal_swap(catenoide, 1.0, grade, mode=modo)
        assert lorentz_residual(psi, grade) < 1e-12
        original = integrate_immersion(catenoide, 1.0, grade)
        assert np.allclose(campo.valores[indice_h], original.valores[2], atol=1e-10)
        norma_psi = np.sum(np.abs(psi.avaliar(grade.nodes)) ** 2, axis=0)
        norma_phi = np.sum(np.abs(catenoide.avaliar(grade.nodes)) ** 2, axis=0)
        assert np.allclose(norma_psi, norma_phi)

    def test_modo_desconhecido(self, catenoide, anel_padrao):
        with pytest.raises(RepresentationError):
            maximal_swap(catenoide, 1.0, sample_grid(anel_padrao, 8, 16), mode="terceiro")

    def test_periodo_imaginario_na_troca(self, anel_padrao):
        tripla = triple_from_laurent(anel_padrao, LaurentPoly.monomio(-1), LaurentPoly.zero(), LaurentPoly.zero())
        with pytest.raises(WellDefinednessError) as erro:
            maximal_swap(tripla, 1.0, sample_grid(anel_padrao, 8, 16), mode="first")
        assert erro.value.componente == 3
        assert erro.value.periodo == pytest.approx(2 * math.pi)
        assert "período imaginário de φ1" in str(erro.value)

    def test_periodo_real_na_troca(self, anel_padrao):
        tripla = triple_from_laurent(anel_padrao, LaurentPoly.zero(), LaurentPoly.zero(), LaurentPoly.monomio(-1, 1j))
        with pytest.raises(WellDefinednessError) as erro:
            maximal_swap(tripla, 1.0, sample_grid(anel_padrao, 8, 16), mode="first")
        assert erro.value.componente == 1
        assert "período real de φ3" in str(erro.value)


class TestAplicacaoDeGauss:
    def test_reconstroi_os_dados(self, anel_padrao, grade_64x256):
        par = GaussPair(u=LaurentPoly.monomio(1, 0.3), eta3=LaurentPoly.monomio(-1), m=1, fator=2.0)
        tripla = from_gauss_pair(par, anel_padrao)
        g = gauss_map(tripla, grade_64x256).amostras
        assert np.allclose(g, par.g(grade_64x256.nodes), rtol=1e-10)
        phi1, phi2, phi3 = tripla.avaliar(grade_64x256.nodes)
        assert np.allclose(phi1, 0.5 * (1 / g - g) * phi3, atol=1e-10)
        assert np.allclose(phi2, 0.5j * (1 / g + g) * phi3, atol=1e-10)

    def test_grade_de_disco_dentro_do_anel(self, anel_padrao):
        # o período real em torno da origem não é visto por um disco que não a contém
        tripla = triple_from_laurent(anel_padrao, LaurentPoly.monomio(-1, 1j), LaurentPoly.monomio(-1),
                                     LaurentPoly.zero())
        grade = sample_grid(make_disk(0.4, center=1.2), 8, 16)
        campo = integrate_immersion(tripla, 1.2, grade)
        assert np.all(np.isfinite(campo.valores))
        assert np.allclose(campo.valores[0], -np.angle(grade.z / 1.2), atol=1e-8)


class TestFluxo:
    @staticmethod
    def _quadrado(pontos_por_lado=400):
        cantos = [1 + 1j, -1 + 1j, -1 - 1j, 1 - 1j, 1 + 1j]
        s = np.linspace(0.0, 1.0, pontos_por_lado, endpoint=False)
        return np.concatenate([a + (b - a) * s for a, b in zip(cantos[:-1], cantos[1:])])

    def test_homologo_ao_gerador(self, catenoide, anel_padrao):
        quadrado = cycle_from_polyline(self._quadrado(), winding_number=1)
        assert np.allclose(flux(catenoide, quadrado), flux(catenoide, generator_cycle(anel_padrao)), atol=1e-3)

    def test_inverte_com_a_orientacao(self, catenoide):
        pontos = self._quadrado()
        ida = flux(catenoide, cycle_from_polyline(pontos, winding_number=1))
        volta = flux(catenoide, cycle_from_polyline(pontos[::-1], winding_number=-1))
        assert np.allclose(volta, -ida, atol=1e-12)

    def test_aditivo_em_duas_voltas(self, catenoide):
        pontos = self._quadrado()
        uma = flux(catenoide, cycle_from_polyline(pontos, winding_number=1))
        duas = flux(catenoide, cycle_from_polyline(np.concatenate([pontos, pontos]), winding_number=2))
        assert np.allclose(duas, 2 * uma, atol=1e-10)
