"""Modelos de base de datos para Contrasta3D: ejecuciones y métricas por paso"""
from sqlalchemy import Column, Integer, String, Float, DateTime, Enum, ForeignKey
from sqlalchemy.orm import declarative_base, relationship
from sqlalchemy.sql import func
import enum

Base = declarative_base()


class EstadoEjecucion(enum.Enum):
    EN_CURSO = "en_curso"
    COMPLETADA = "completada"
    FALLIDA = "fallida"


class Ejecucion(Base):
    __tablename__ = "ejecuciones"
    id = Column(Integer, primary_key=True, autoincrement=True)
    estrategia = Column(String(30), nullable=False, index=True)
    semilla = Column(Integer, nullable=False)
    epocas = Column(Integer, nullable=False)
    estado = Column(Enum(EstadoEjecucion), nullable=False, default=EstadoEjecucion.EN_CURSO, index=True)
    directorio_salida = Column(String(500), nullable=True)
    segundos = Column(Float, nullable=True)
    pasos = Column(Integer, default=0)
    fecha_inicio = Column(DateTime, default=func.now(), nullable=False)
    fecha_fin = Column(DateTime, nullable=True)

    metricas = relationship("MetricaPaso", back_populates="ejecucion", cascade="all, delete-orphan")

    def __repr__(self):
        return f"<Ejecucion {self.id}: {self.estrategia} seed={self.semilla} - {self.estado.value}>"


class MetricaPaso(Base):
    __tablename__ = "metricas_paso"
    id = Column(Integer, primary_key=True, autoincrement=True)
    ejecucion_id = Column(Integer, ForeignKey("ejecuciones.id"), nullable=False, index=True)
    paso = Column(Integer, nullable=False, index=True)
    epoca = Column(Integer, nullable=False)
    lr = Column(Float, nullable=False)
    l_ab = Column(Float, nullable=False, default=0.0)
    l_ba = Column(Float, nullable=False, default=0.0)
    g_ab = Column(Float, nullable=False, default=0.0)
    g_ba = Column(Float, nullable=False, default=0.0)
    total = Column(Float, nullable=False, default=0.0)
    pares = Column(Integer, nullable=False, default=0)
    acc = Column(Float, nullable=False, default=0.0)
    omitidos = Column(Integer, nullable=False, default=0)

    ejecucion = relationship("Ejecucion", back_populates="metricas")

    def __repr__(self):
        return f"<MetricaPaso ejecucion={self.ejecucion_id} paso={self.paso} total={self.total:.4f}>"
