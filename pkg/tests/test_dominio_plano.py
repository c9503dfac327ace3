import math

import numpy as np
import pytest

from dominio_plano import (arco_da_alca, componentes_anulares, cycle_from_polyline, discrete_laplacian,
                           disco_da_alca, envoltoria_anular, fits_labyrinth, folga_aninhamento, generator_cycle,
                           make_admissible, make_annulus, make_disk, make_exhaustion, sample_grid)
from erros import DomainDegenerateError, ResolutionError


class TestCartas:
    def test_anel_degenerado(self):
        with pytest.raises(DomainDegenerateError):
            make_annulus(2.0, 1.0)
        with pytest.raises(DomainDegenerateError):
            make_annulus(0.0, 1.0)

    def test_disco_degenerado(self):
        with pytest.raises(DomainDegenerateError):
            make_disk(0.0)

    def test_encaixe_do_labirinto(self, anel_labirinto):
        assert fits_labyrinth(anel_labirinto, 3)
        assert not fits_labyrinth(anel_labirinto, 2)


class TestGrade:
    def test_contagem_de_nos(self):
        grade = sample_grid(make_annulus(1.0, 2.0), 4, 8)
        assert grade.n_nos == 32
        assert grade.z.shape == (4, 8)
        assert np.allclose(np.abs(grade.z[0]), 1.0)
        assert np.allclose(np.abs(grade.z[-1]), 2.0)

    def test_disco_repete_o_centro(self, disco_unitario):
        grade = sample_grid(disco_unitario, 5, 16)
        assert np.all(grade.z[0] == 0)
        assert len(grade.fronteira_interna()) == 0
        assert len(grade.fronteira()) == 16

    def test_grade_pequena(self, anel_padrao):
        with pytest.raises(ResolutionError):
            sample_grid(anel_padrao, 1, 8)
        with pytest.raises(ResolutionError):
            sample_grid(anel_padrao, 4, 4)

    def test_passo_nao_resolve_bandas(self, anel_labirinto):
        with pytest.raises(ResolutionError):
            sample_grid(anel_labirinto, 10, 64, N=3)
        sample_grid(anel_labirinto, 163, 64, N=3)

    def test_limite_de_nos(self, anel_padrao, monkeypatch):
        from configuracao import LIMITES_GRADE
        monkeypatch.setitem(LIMITES_GRADE, "maximo_nos", 100)
        with pytest.raises(ResolutionError):
            sample_grid(anel_padrao, 20, 20)


class TestCiclos:
    def test_residuo_no_gerador(self, anel_padrao):
        ciclo = generator_cycle(anel_padrao)
        z = ciclo.amostras
        assert abs(ciclo.integrar(1 / z) - 2j * math.pi) < 1e-12
        assert abs(ciclo.integrar(np.ones_like(z))) < 1e-12
        assert abs(np.abs(z[0]) - 1.0) < 1e-15

    def test_poligonal_fechada(self):
        quadrado = [1 + 1j, -1 + 1j, -1 - 1j, 1 - 1j]
        ciclo = cycle_from_polyline(quadrado, winding_number=1)
        assert abs(ciclo.pontos[0] - ciclo.pontos[-1]) == 0
        assert abs(ciclo.integrar(np.ones(4))) < 1e-14


class TestExaustao:
    def test_torre_de_discos(self):
        torre = make_exhaustion("disk-tower", 3)
        assert [V.outer_radius for V in torre.regions] == [1.0, 2.0, 3.0]

    def test_torre_de_aneis_aninhada(self):
        torre = make_exhaustion("annulus-tower", 4)
        for n in range(3):
            assert folga_aninhamento(torre[n], torre[n + 1]) > 0
        assert torre[3].inner_radius > math.exp(-1)
        assert torre[3].outer_radius < math.exp(1)

    def test_raios_nao_aninhados(self):
        with pytest.raises(DomainDegenerateError):
            make_exhaustion("disk-tower", 2, raios=[2.0, 1.0])

    def test_tipo_desconhecido(self):
        with pytest.raises(DomainDegenerateError):
            make_exhaustion("toro", 2)

    def test_torre_com_alca(self):
        torre = make_exhaustion("handle-tower", 3)
        V1 = torre[0]
        assert V1.e_disco and not V1.contem(0j)
        assert V1.center == pytest.approx(1.0)
        assert not torre[1].e_disco
        assert folga_aninhamento(V1, torre[1]) > 0
        assert folga_aninhamento(torre[1], torre[2]) > 0

    def test_envoltoria_da_alca(self):
        V1 = disco_da_alca(math.exp(-1), math.exp(1))
        envoltoria = envoltoria_anular(V1)
        assert envoltoria.inner_radius == pytest.approx(1.0 - V1.radius)
        assert envoltoria.outer_radius == pytest.approx(1.0 + V1.radius)
        with pytest.raises(DomainDegenerateError):
            envoltoria_anular(make_disk(1.0))


class TestComponentesAnulares:
    def test_disco_dentro_de_disco(self):
        (A,) = componentes_anulares(make_disk(1.0), make_disk(2.0))
        assert (A.inner_radius, A.outer_radius) == (1.0, 2.0)

    def test_anel_dentro_de_anel(self):
        componentes = componentes_anulares(make_annulus(1.0, 2.0), make_annulus(0.5, 3.0))
        assert [(A.inner_radius, A.outer_radius) for A in componentes] == [(0.5, 1.0), (2.0, 3.0)]

    def test_nao_concentricos(self):
        with pytest.raises(DomainDegenerateError):
            componentes_anulares(make_disk(0.2, center=1.0), make_annulus(0.5, 2.0))


class TestAdmissivel:
    @staticmethod
    def _arco_externo():
        theta = np.linspace(0, math.pi, 50)
        return np.concatenate([[1.0], 1.5 * np.exp(1j * theta), [-1.0]])

    def test_arco_valido(self, disco_unitario):
        S = make_admissible(disco_unitario, [self._arco_externo()])
        assert len(S.arcs) == 1

    def test_extremidade_fora_da_fronteira(self, disco_unitario):
        arco = self._arco_externo()
        arco[0] = 1.2
        with pytest.raises(DomainDegenerateError):
            make_admissible(disco_unitario, [arco])

    def test_arco_que_entra_em_U(self, disco_unitario):
        arco = np.array([1.0, 0.5, -1.0], dtype=complex)
        with pytest.raises(DomainDegenerateError):
            make_admissible(disco_unitario, [arco])

    def test_arco_da_alca(self):
        V1 = disco_da_alca(math.exp(-1), math.exp(1))
        arco, retorno = arco_da_alca(V1)
        S = make_admissible(V1, [arco])
        assert len(S.arcs) == 1
        assert np.all(V1.contem(retorno, tol=1e-12))
        laco = cycle_from_polyline(np.concatenate([arco, retorno[1:]]), winding_number=1)
        assert abs(laco.integrar(1 / laco.amostras) - 2j * math.pi) < 1e-2


class TestLaplaciano:
    def test_parte_real_de_z(self):
        grade = sample_grid(make_annulus(0.5, 2.0), 32, 256)
        lap = discrete_laplacian(np.real(grade.z), grade)
        assert np.all(np.isnan(lap[0])) and np.all(np.isnan(lap[-1]))
        assert np.nanmax(np.abs(lap)) < 1e-3

    def test_log_do_modulo(self):
        grade = sample_grid(make_annulus(0.5, 2.0), 200, 64)
        lap = discrete_laplacian(np.log(np.abs(grade.z)), grade)
        assert np.nanmax(np.abs(lap)) < 1e-2

    def test_funcao_nao_harmonica(self):
        grade = sample_grid(make_annulus(0.5, 2.0), 16, 64)
        lap = discrete_laplacian(np.abs(grade.z) ** 2, grade)
        assert np.allclose(lap[1:-1], 4.0, atol=1e-8)
